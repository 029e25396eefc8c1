#!/usr/bin/env python3
"""Serve a synthetic Gerrit REST corpus on localhost for manual experiments.

Point the CLI's crawl config at the printed base URL, e.g.:
  {"crawl": {"base_url": "http://127.0.0.1:8666", ...}}
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from reviewtime.gerrit_fixture import FixtureGerritServer, generate_corpus


def run(args) -> int:
    corpus = generate_corpus(args.changes, seed=args.seed)
    with FixtureGerritServer(corpus, port=args.port) as server:
        print(f"serving {len(corpus)} changes at {server.base_url} "
              f"(Ctrl-C to stop)")
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            print("\nbye")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8666)
    parser.add_argument("--changes", type=int, default=200)
    parser.add_argument("--seed", type=int, default=11)
    sys.exit(run(parser.parse_args()))
