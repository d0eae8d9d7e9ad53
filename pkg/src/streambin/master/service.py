"""Master REST service: the front door for workers and stream connectors,
hosting the resource-manager loops on wall-clock timers.

Registry, backlog and PE directory are one logically shared state; every
mutation serializes on a single lock, so handler threads and the periodic
loops stay linearizable.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import requests

from streambin.clock import to_millis
from streambin.events import EventLog
from streambin.harness.metrics import build_frame
from streambin.irm.engine import IrmEngine
from streambin.master.state import MasterState, UnknownWorkerError
from streambin.protocol import (
    HDR_IMAGE,
    HDR_MESSAGE_ID,
    HDR_TAG,
    MASTER_PE_QUERY,
    MASTER_PE_REQUEST,
    MASTER_REGISTER,
    MASTER_REPORT,
    MASTER_STATUS,
    MASTER_STREAM,
    WORKER_PE_START,
    WORKER_PE_STOP,
    WORKER_STREAM,
    MalformedFrameError,
    StreamMessage,
    WorkerReport,
    decode,
)


class HttpWorkerTransport:
    """Master-to-worker calls over the worker REST endpoints."""

    def __init__(self, timeout: float = 5.0):
        self.timeout = timeout
        # All calls happen under the master lock, so one session is safe and
        # keeps connections to workers alive across the many small calls.
        self.session = requests.Session()

    def send_stream(self, record, message) -> bool:
        try:
            resp = self.session.post(
                f"http://{record.host}:{record.port}{WORKER_STREAM}",
                data=message.payload,
                headers={
                    HDR_IMAGE: message.image,
                    HDR_TAG: message.tag,
                    HDR_MESSAGE_ID: message.message_id,
                },
                timeout=self.timeout,
            )
            return resp.status_code == 200
        except requests.RequestException:
            return False

    def start_pe(self, record, image, tag, pe_id, estimated_cpu) -> bool:
        try:
            resp = self.session.post(
                f"http://{record.host}:{record.port}{WORKER_PE_START}",
                json={"image": image, "tag": tag, "pe_id": pe_id,
                      "estimated_cpu": estimated_cpu},
                timeout=self.timeout,
            )
            return resp.status_code == 201
        except requests.RequestException:
            return False

    def stop_pe(self, record, pe_id) -> bool:
        try:
            resp = self.session.post(
                f"http://{record.host}:{record.port}{WORKER_PE_STOP}",
                json={"pe_id": pe_id},
                timeout=self.timeout,
            )
            return resp.status_code == 200
        except requests.RequestException:
            return False


class MasterService:
    def __init__(self, config, host: str, port: int, log_stream=None):
        self.config = config
        self.host = host
        self.port = port
        self.lock = threading.RLock()
        sink = None
        if log_stream is not None:
            sink = lambda line: print(line, file=log_stream, flush=True)
        self.events = EventLog(sink=sink)
        self.transport = HttpWorkerTransport()
        self.master = MasterState(config, self.events, self.transport)
        self.engine = IrmEngine(self.master, config, self.events, self.transport)
        self.started_at = time.time()
        self._stop = threading.Event()
        self._server = None
        self._threads: list[threading.Thread] = []

    def now(self) -> float:
        return time.time() - self.started_at

    # -- loops ------------------------------------------------------------------

    def _loop(self, interval, fn):
        while not self._stop.wait(interval):
            with self.lock:
                fn(self.now())

    def start(self):
        self._server = ThreadingHTTPServer((self.host, self.port), _MasterHandler)
        self._server.service = self
        self.port = self._server.server_address[1]
        threads = [
            threading.Thread(target=self._server.serve_forever, daemon=True),
            threading.Thread(
                target=self._loop,
                args=(self.config.packing_interval, self.engine.packing_tick),
                daemon=True,
            ),
            threading.Thread(
                target=self._loop,
                args=(self.config.predictor_interval, self.engine.predictor_tick),
                daemon=True,
            ),
            threading.Thread(
                target=self._loop,
                args=(min(0.5, max(0.1, self.config.container_idle_timeout / 2)),
                      self.engine.reaper_tick),
                daemon=True,
            ),
            threading.Thread(
                target=self._loop,
                args=(self.config.report_interval, self.master.liveness_check),
                daemon=True,
            ),
        ]
        for t in threads:
            t.start()
        self._threads = threads
        return self

    def stop(self):
        self._stop.set()
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()

    # -- handler operations --------------------------------------------------------

    def register(self, host, port):
        with self.lock:
            return self.master.register_worker(host, port, self.now())

    def ingest_report(self, report: WorkerReport):
        with self.lock:
            self.master.ingest_report(report, self.now())

    def find_pe(self, image, tag):
        with self.lock:
            return self.master.find_available_pe(image, tag, self.now())

    def enqueue(self, message: StreamMessage) -> int:
        with self.lock:
            # A client may retry after a timed-out response; the first
            # attempt already owns this id, so the retry is a no-op.
            if message.message_id in self.master.accepted_ids:
                return len(self.master.backlog)
            return self.master.enqueue_backlog(message, self.now())

    def request_pes(self, image, tag, count):
        with self.lock:
            self.engine.request_pes(image, tag, count, self.now())

    def status(self):
        with self.lock:
            return build_frame(self.master, self.now()).to_json()


class _MasterHandler(BaseHTTPRequestHandler):
    # Keep-alive; every response carries an explicit Content-Length.
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    @property
    def service(self) -> MasterService:
        return self.server.service

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length)

    def _respond(self, code: int, obj=None):
        body = b"" if obj is None else json.dumps(obj).encode()
        self.send_response(code)
        if body:
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
        else:
            self.send_header("Content-Length", "0")
        self.end_headers()
        if body:
            self.wfile.write(body)

    def do_GET(self):
        parsed = urlparse(self.path)
        if parsed.path == MASTER_PE_QUERY:
            params = parse_qs(parsed.query)
            image = params.get("image", [""])[0]
            tag = params.get("tag", ["latest"])[0]
            endpoint = self.service.find_pe(image, tag)
            if endpoint is None:
                self._respond(204)
            else:
                self._respond(200, {
                    "type": "PeEndpoint",
                    "worker_id": endpoint.worker_id,
                    "host": endpoint.host,
                    "port": endpoint.port,
                    "pe_id": endpoint.pe_id,
                    "image": endpoint.image,
                    "tag": endpoint.tag,
                })
        elif parsed.path == MASTER_STATUS:
            self._respond(200, self.service.status())
        else:
            self._respond(404, {"error": "unknown path"})

    def do_POST(self):
        path = urlparse(self.path).path
        body = self._body()
        try:
            if path == MASTER_REGISTER:
                obj = json.loads(body)
                worker_id = self.service.register(obj["host"], int(obj["port"]))
                self._respond(200, {"worker_id": worker_id})
            elif path == MASTER_REPORT:
                report = decode(body, WorkerReport)
                try:
                    self.service.ingest_report(report)
                    self._respond(200)
                except UnknownWorkerError:
                    self._respond(404, {"error": "unknown worker; re-register"})
            elif path == MASTER_STREAM:
                message = StreamMessage(
                    payload=body,
                    image=self.headers.get(HDR_IMAGE, ""),
                    tag=self.headers.get(HDR_TAG, "latest"),
                    message_id=self.headers.get(HDR_MESSAGE_ID, ""),
                    created_at=to_millis(time.time()),
                )
                length = self.service.enqueue(message)
                self._respond(202, {"queue_length": length})
            elif path == MASTER_PE_REQUEST:
                obj = json.loads(body)
                self.service.request_pes(
                    obj["image"], obj.get("tag", "latest"), int(obj.get("count", 1))
                )
                self._respond(202)
            else:
                self._respond(404, {"error": "unknown path"})
        except (MalformedFrameError, ValueError, KeyError) as exc:
            self._respond(400, {"error": str(exc)})
