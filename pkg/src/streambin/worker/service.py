"""Worker REST service: hosts PEs, receives P2P stream messages, and
reports CPU usage to the master every report interval."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlparse

import requests

from streambin.clock import to_millis
from streambin.events import EventLog
from streambin.protocol import (
    HDR_IMAGE,
    HDR_MESSAGE_ID,
    HDR_TAG,
    MASTER_REGISTER,
    MASTER_REPORT,
    WORKER_PE_START,
    WORKER_PE_STOP,
    WORKER_STREAM,
    StreamMessage,
    encode,
)
from streambin.worker.backends import make_backend
from streambin.worker.state import ResourceExhausted, WorkerNotReady, WorkerState


class WorkerService:
    def __init__(self, master: str, host: str, port: int, backend: str = "simulated",
                 report_interval: float = 1.0, pe_startup_delay: float = 0.0,
                 log_stream=None):
        self.master = master
        self.host = host
        self.port = port
        self.report_interval = report_interval
        self.lock = threading.RLock()
        sink = None
        if log_stream is not None:
            sink = lambda line: print(line, file=log_stream, flush=True)
        self.events = EventLog(sink=sink)
        self.state = WorkerState(
            host, port, make_backend(backend), self.events,
            pe_startup_delay=pe_startup_delay,
        )
        self.started_at = time.time()
        self._stop = threading.Event()
        self._server = None

    def now(self) -> float:
        return time.time() - self.started_at

    def start(self):
        self._server = ThreadingHTTPServer((self.host, self.port), _WorkerHandler)
        self._server.service = self
        self.port = self._server.server_address[1]
        self.state.port = self.port
        self._register()
        threading.Thread(target=self._server.serve_forever, daemon=True).start()
        threading.Thread(target=self._report_loop, daemon=True).start()
        return self

    def stop(self):
        self._stop.set()
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()

    def _register(self):
        while not self._stop.is_set():
            try:
                resp = requests.post(
                    f"http://{self.master}{MASTER_REGISTER}",
                    json={"host": self.host, "port": self.port},
                    timeout=5,
                )
                if resp.status_code == 200:
                    self.state.worker_id = resp.json()["worker_id"]
                    return
            except requests.RequestException:
                pass
            time.sleep(0.5)

    def _report_loop(self):
        next_report = time.time()
        while not self._stop.wait(0.1):
            with self.lock:
                self.state.poll(self.now())
            if time.time() < next_report:
                continue
            next_report += self.report_interval
            with self.lock:
                report = self.state.sample_and_report(self.now())
            report = report.__class__(
                report.worker_id, to_millis(time.time()),
                report.pe_stats, report.per_image_avg,
            )
            try:
                resp = requests.post(
                    f"http://{self.master}{MASTER_REPORT}",
                    data=encode(report), timeout=5,
                )
                if resp.status_code == 404:
                    self._register()
            except requests.RequestException:
                pass


class _WorkerHandler(BaseHTTPRequestHandler):
    # Keep-alive; every response carries an explicit Content-Length.
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    @property
    def service(self) -> WorkerService:
        return self.server.service

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length)

    def _respond(self, code: int, obj=None):
        body = b"" if obj is None else json.dumps(obj).encode()
        self.send_response(code)
        self.send_header("Content-Length", str(len(body)))
        if body:
            self.send_header("Content-Type", "application/json")
        self.end_headers()
        if body:
            self.wfile.write(body)

    def do_POST(self):
        svc = self.service
        path = urlparse(self.path).path
        body = self._body()
        try:
            if path == WORKER_STREAM:
                message = StreamMessage(
                    payload=body,
                    image=self.headers.get(HDR_IMAGE, ""),
                    tag=self.headers.get(HDR_TAG, "latest"),
                    message_id=self.headers.get(HDR_MESSAGE_ID, ""),
                    created_at=to_millis(time.time()),
                )
                with svc.lock:
                    accepted = svc.state.receive_stream(message, svc.now())
                self._respond(200 if accepted else 503)
            elif path == WORKER_PE_START:
                obj = json.loads(body)
                try:
                    with svc.lock:
                        svc.state.start_pe(
                            obj["image"], obj.get("tag", "latest"),
                            obj["pe_id"], float(obj.get("estimated_cpu", 0.5)),
                            svc.now(),
                        )
                    self._respond(201, {
                        "worker_id": svc.state.worker_id,
                        "host": svc.host, "port": svc.port,
                        "pe_id": obj["pe_id"],
                        "image": obj["image"], "tag": obj.get("tag", "latest"),
                    })
                except (WorkerNotReady, ResourceExhausted) as exc:
                    self._respond(503, {"error": str(exc)})
            elif path == WORKER_PE_STOP:
                obj = json.loads(body)
                with svc.lock:
                    svc.state.stop_pe(obj["pe_id"], svc.now())
                self._respond(200)
            else:
                self._respond(404, {"error": "unknown path"})
        except (ValueError, KeyError) as exc:
            self._respond(400, {"error": str(exc)})
