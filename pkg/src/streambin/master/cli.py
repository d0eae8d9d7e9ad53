"""`master --config <file> --listen <host:port>`"""

from __future__ import annotations

import argparse
import sys
import time

from streambin.irm.config import IrmConfig
from streambin.master.service import MasterService


def parse_listen(value: str):
    host, _, port = value.rpartition(":")
    return host or "127.0.0.1", int(port)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="master", description="streambin master node")
    parser.add_argument("--config", help="IRM config JSON")
    parser.add_argument("--listen", default="127.0.0.1:8900")
    args = parser.parse_args(argv)

    config = IrmConfig.from_file(args.config) if args.config else IrmConfig()
    host, port = parse_listen(args.listen)
    service = MasterService(config, host, port, log_stream=sys.stdout).start()
    print(f"master listening on {service.host}:{service.port}", flush=True)
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
