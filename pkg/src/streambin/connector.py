"""Stream-connector client: asks the master for a PE endpoint, sends the
payload peer-to-peer, and falls back to the master backlog when no PE is
available or the worker turns the message away."""

from __future__ import annotations

import argparse
import sys
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import requests

from streambin.clock import to_millis
from streambin.protocol import (
    HDR_IMAGE,
    HDR_MESSAGE_ID,
    HDR_TAG,
    MASTER_PE_QUERY,
    MASTER_STREAM,
    WORKER_STREAM,
    StreamMessage,
)

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 0.2


class TransportError(Exception):
    """Master unreachable after all retries."""


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
        created_at=to_millis(time.time()),
    )


def _request_with_retries(method, url, retries, backoff_s, **kwargs):
    delay = backoff_s
    last = None
    for attempt in range(retries):
        try:
            return requests.request(method, url, timeout=10, **kwargs)
        except (requests.ConnectionError, requests.Timeout) as exc:
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
    query = _request_with_retries(
        "GET", f"http://{master}{MASTER_PE_QUERY}",
        retries, backoff_s,
        params={"image": message.image, "tag": message.tag},
    )
    if query.status_code == 200:
        endpoint = query.json()
        try:
            resp = requests.post(
                f"http://{endpoint['host']}:{endpoint['port']}{WORKER_STREAM}",
                data=message.payload,
                headers=_stream_headers(message),
                timeout=10,
            )
            if resp.status_code == 200:
                return Delivery(message.message_id, "p2p", endpoint["worker_id"])
        except requests.RequestException:
            pass  # worker gone or saturated; message falls back to the queue

    _request_with_retries(
        "POST", f"http://{master}{MASTER_STREAM}",
        retries, backoff_s,
        data=message.payload, headers=_stream_headers(message),
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
    parser = argparse.ArgumentParser(prog="connector", description="stream-connector client")
    sub = parser.add_subparsers(dest="command", required=True)

    p_send = sub.add_parser("send", help="send one payload")
    p_send.add_argument("--master", required=True)
    p_send.add_argument("--image", required=True)
    p_send.add_argument("--tag", default="latest")
    p_send.add_argument("--file", required=True)
    p_send.add_argument("--retries", type=int, default=DEFAULT_RETRIES)
    p_send.add_argument("--backoff", type=float, default=DEFAULT_BACKOFF_S)

    p_bench = sub.add_parser("bench", help="run a harness scenario")
    p_bench.add_argument("--scenario", required=True)
    p_bench.add_argument("--out", default="run-out")

    args = parser.parse_args(argv)
    if args.command == "send":
        with open(args.file, "rb") as fh:
            payload = fh.read()
        message = make_message(payload, args.image, args.tag)
        delivery = send(message, args.master, args.retries, args.backoff)
        print(f"{delivery.message_id} {delivery.outcome}"
              + (f" {delivery.worker_id}" if delivery.worker_id else ""))
        return 0
    if args.command == "bench":
        from streambin.harness.runner import run_scenario_file

        run_scenario_file(args.scenario, args.out)
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
