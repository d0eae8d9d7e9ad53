"""Standalone stream-connector client for streambin clusters.

Speaks the cluster's plain HTTP wire protocol with nothing outside the
standard library: ask the master for a processing-element endpoint, send
the payload peer-to-peer, and fall back to the master queue when no
endpoint is available or the worker turns the message away.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import urllib.error
import urllib.parse
import urllib.request
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "Delivery",
    "StreamMessage",
    "TransportError",
    "main",
    "make_message",
    "send",
    "send_batch",
]

PE_QUERY_PATH = "/api/pe"
STREAM_PATH = "/api/stream"

HDR_IMAGE = "X-Stream-Image"
HDR_TAG = "X-Stream-Tag"
HDR_MESSAGE_ID = "X-Message-Id"

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 0.2
REQUEST_TIMEOUT_S = 10.0


class TransportError(Exception):
    """Master unreachable after all retries."""


@dataclass
class StreamMessage:
    payload: bytes
    image: str
    tag: str
    message_id: str


@dataclass
class Delivery:
    message_id: str
    outcome: str  # "p2p" | "queued"
    worker_id: Optional[str] = None


def make_message(payload: bytes, image: str, tag: str = "latest",
                 message_id: Optional[str] = None) -> StreamMessage:
    return StreamMessage(
        payload=payload, image=image, tag=tag,
        message_id=message_id or f"c-{uuid.uuid4().hex}",
    )


def _http(method: str, url: str, body: Optional[bytes] = None,
          headers: Optional[dict] = None):
    """One HTTP exchange. Returns (status, body); raises OSError on
    transport failure (refused, reset, timed out)."""
    request = urllib.request.Request(
        url, data=body, headers=headers or {}, method=method
    )
    try:
        with urllib.request.urlopen(request, timeout=REQUEST_TIMEOUT_S) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        # Non-2xx still means the peer answered; hand the status back.
        return exc.code, exc.read()
    except urllib.error.URLError as exc:
        reason = exc.reason
        raise reason if isinstance(reason, OSError) else OSError(str(reason))


def _http_with_retries(method, url, retries, backoff_s, body=None, headers=None):
    delay = backoff_s
    last = None
    for attempt in range(retries):
        try:
            return _http(method, url, body, headers)
        except OSError as exc:
            last = exc
            if attempt < retries - 1:
                time.sleep(delay)
                delay *= 2
    raise TransportError(f"{method} {url} failed after {retries} attempts") from last


def _stream_headers(message: StreamMessage) -> dict:
    return {
        HDR_IMAGE: message.image,
        HDR_TAG: message.tag,
        HDR_MESSAGE_ID: message.message_id,
    }


def send(message: StreamMessage, master: str,
         retries: int = DEFAULT_RETRIES, backoff_s: float = DEFAULT_BACKOFF_S) -> Delivery:
    """Deliver one message: P2P when a PE is available, master queue otherwise."""
    query = urllib.parse.urlencode({"image": message.image, "tag": message.tag})
    status, body = _http_with_retries(
        "GET", f"http://{master}{PE_QUERY_PATH}?{query}", retries, backoff_s
    )
    if status == 200:
        endpoint = json.loads(body)
        try:
            code, _ = _http(
                "POST",
                f"http://{endpoint['host']}:{endpoint['port']}{STREAM_PATH}",
                body=message.payload,
                headers=_stream_headers(message),
            )
            if code == 200:
                return Delivery(message.message_id, "p2p", endpoint["worker_id"])
        except OSError:
            pass  # worker gone or saturated; message falls back to the queue

    _http_with_retries(
        "POST", f"http://{master}{STREAM_PATH}", retries, backoff_s,
        body=message.payload, headers=_stream_headers(message),
    )
    return Delivery(message.message_id, "queued")


def send_batch(messages, master: str, concurrency: int = 8,
               retries: int = DEFAULT_RETRIES, backoff_s: float = DEFAULT_BACKOFF_S):
    """Submit messages with a bounded in-flight set; results in input order."""
    if not messages:
        return []
    if concurrency <= 1:
        return [send(m, master, retries, backoff_s) for m in messages]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        futures = [pool.submit(send, m, master, retries, backoff_s) for m in messages]
        return [f.result() for f in futures]


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="streambin-send",
        description="send a payload into a streambin cluster",
    )
    parser.add_argument("--master", required=True, help="master host:port")
    parser.add_argument("--image", required=True)
    parser.add_argument("--tag", default="latest")
    parser.add_argument("--file", required=True,
                        help="payload file, or '-' for stdin")
    parser.add_argument("--retries", type=int, default=DEFAULT_RETRIES)
    parser.add_argument("--backoff", type=float, default=DEFAULT_BACKOFF_S)
    args = parser.parse_args(argv)

    if args.file == "-":
        payload = sys.stdin.buffer.read()
    else:
        with open(args.file, "rb") as fh:
            payload = fh.read()
    message = make_message(payload, args.image, args.tag)
    try:
        delivery = send(message, args.master, args.retries, args.backoff)
    except TransportError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"{delivery.message_id} {delivery.outcome}"
          + (f" {delivery.worker_id}" if delivery.worker_id else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
