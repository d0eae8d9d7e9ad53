"""`worker --master <host:port> --listen <host:port> --backend synthetic|simulated`"""

from __future__ import annotations

import argparse
import sys
import time

from streambin.worker.service import WorkerService


def main(argv=None):
    parser = argparse.ArgumentParser(prog="worker", description="streambin worker node")
    parser.add_argument("--master", required=True)
    parser.add_argument("--listen", default="127.0.0.1:0")
    parser.add_argument("--backend", default="simulated",
                        choices=["synthetic", "simulated"])
    parser.add_argument("--report-interval", type=float, default=1.0)
    parser.add_argument("--pe-startup-delay", type=float, default=0.0)
    args = parser.parse_args(argv)

    host, _, port = args.listen.rpartition(":")
    service = WorkerService(
        args.master, host or "127.0.0.1", int(port or 0),
        backend=args.backend,
        report_interval=args.report_interval,
        pe_startup_delay=args.pe_startup_delay,
        log_stream=sys.stdout,
    ).start()
    print(f"worker {service.state.worker_id} listening on "
          f"{service.host}:{service.port}", flush=True)
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
