"""Connector client against stub master/worker HTTP servers: P2P happy
path, backlog fallback, the query/send race and retry behavior."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from streambin import connector
from streambin.protocol import HDR_IMAGE, HDR_MESSAGE_ID, HDR_TAG


class StubServer:
    """Scriptable HTTP endpoint that records every request it sees."""

    def __init__(self):
        self.requests = []
        self.pe_response = None  # dict -> 200, None -> 204
        self.worker_stream_status = 200
        server = self

        class Handler(BaseHTTPRequestHandler):
            def _record(self):
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length) if length else b""
                server.requests.append({
                    "method": self.command,
                    "path": self.path,
                    "headers": {k: v for k, v in self.headers.items()},
                    "body": body,
                })
                return body

            def do_GET(self):
                self._record()
                if self.path.startswith("/api/pe"):
                    if server.pe_response is None:
                        self.send_response(204)
                        self.end_headers()
                    else:
                        payload = json.dumps(server.pe_response).encode()
                        self.send_response(200)
                        self.send_header("Content-Type", "application/json")
                        self.send_header("Content-Length", str(len(payload)))
                        self.end_headers()
                        self.wfile.write(payload)
                else:
                    self.send_response(404)
                    self.end_headers()

            def do_POST(self):
                self._record()
                if self.path == "/api/stream":
                    status = (server.worker_stream_status
                              if server.role == "worker" else 202)
                    self.send_response(status)
                else:
                    self.send_response(404)
                self.end_headers()

            def log_message(self, *args):
                pass

        self.role = "master"
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self.httpd.server_address[1]
        self.addr = f"127.0.0.1:{self.port}"
        threading.Thread(target=self.httpd.serve_forever, daemon=True).start()

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()

    def paths(self):
        return [r["path"] for r in self.requests]


@pytest.fixture()
def master():
    server = StubServer()
    yield server
    server.close()


@pytest.fixture()
def worker():
    server = StubServer()
    server.role = "worker"
    yield server
    server.close()


def test_p2p_delivery(master, worker):
    master.pe_response = {
        "worker_id": "w0", "host": "127.0.0.1", "port": worker.port,
        "pe_id": "pe-0", "image": "img", "tag": "latest",
    }
    msg = connector.make_message(b"hello", "img", "latest", "m-1")
    delivery = connector.send(msg, master.addr)
    assert (delivery.outcome, delivery.worker_id) == ("p2p", "w0")

    sent = worker.requests[0]
    assert sent["method"] == "POST"
    assert sent["path"] == "/api/stream"
    assert sent["body"] == b"hello"
    assert sent["headers"][HDR_IMAGE] == "img"
    assert sent["headers"][HDR_TAG] == "latest"
    assert sent["headers"][HDR_MESSAGE_ID] == "m-1"
    # The master only saw the PE query, not the payload.
    assert master.paths() == ["/api/pe?image=img&tag=latest"]


def test_no_pe_falls_back_to_queue(master):
    master.pe_response = None
    delivery = connector.send(connector.make_message(b"x", "img"), master.addr)
    assert delivery.outcome == "queued"
    assert delivery.worker_id is None
    assert master.paths() == ["/api/pe?image=img&tag=latest", "/api/stream"]


def test_worker_503_race_falls_back_to_queue(master, worker):
    # PE advertised but taken before the send lands: no message loss.
    master.pe_response = {
        "worker_id": "w0", "host": "127.0.0.1", "port": worker.port,
        "pe_id": "pe-0", "image": "img", "tag": "latest",
    }
    worker.worker_stream_status = 503
    delivery = connector.send(connector.make_message(b"x", "img"), master.addr)
    assert delivery.outcome == "queued"
    assert master.paths()[-1] == "/api/stream"


def test_dead_worker_falls_back_to_queue(master):
    master.pe_response = {
        "worker_id": "w0", "host": "127.0.0.1", "port": 1,  # nothing listens
        "pe_id": "pe-0", "image": "img", "tag": "latest",
    }
    delivery = connector.send(connector.make_message(b"x", "img"), master.addr)
    assert delivery.outcome == "queued"


def test_master_unreachable_raises_after_retries():
    msg = connector.make_message(b"x", "img")
    with pytest.raises(connector.TransportError):
        connector.send(msg, "127.0.0.1:1", retries=3, backoff_s=0.01)


def test_send_batch_preserves_input_order(master):
    master.pe_response = None
    messages = [connector.make_message(b"x", "img", message_id=f"m-{i}")
                for i in range(10)]
    deliveries = connector.send_batch(messages, master.addr, concurrency=4)
    assert [d.message_id for d in deliveries] == [f"m-{i}" for i in range(10)]
    assert all(d.outcome == "queued" for d in deliveries)


def test_send_batch_empty():
    assert connector.send_batch([], "127.0.0.1:1") == []


def test_send_batch_sequential_when_concurrency_one(master):
    master.pe_response = None
    messages = [connector.make_message(b"x", "img", message_id=f"m-{i}")
                for i in range(4)]
    connector.send_batch(messages, master.addr, concurrency=1)
    stream_posts = [r for r in master.requests if r["path"] == "/api/stream"]
    assert [r["headers"][HDR_MESSAGE_ID] for r in stream_posts] == \
        [f"m-{i}" for i in range(4)]


def test_make_message_generates_unique_ids():
    a = connector.make_message(b"x", "img")
    b = connector.make_message(b"x", "img")
    assert a.message_id != b.message_id
