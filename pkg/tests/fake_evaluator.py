"""Minimal protocol-v1 evaluator used by the client tests.

Computes the sphere objective over the numeric params it receives.
Misbehavior for error-path tests is selected with --behave:

    ok            normal operation
    nan           replies with a NaN objective
    crash-after   exits abruptly after the first result
    unknown-type  replies with an unrecognized message type
    slow          sleeps 5s before each result
    old-version   claims protocol version 0 in the ready message
    error-reply   replies with an error message to every eval
"""

import argparse
import json
import sys
import time


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--behave", default="ok")
    args = parser.parse_args()

    replied = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        msg = json.loads(line)
        kind = msg.get("type")
        if kind == "hello":
            version = 0 if args.behave == "old-version" else 1
            print(json.dumps({"type": "ready", "version": version}), flush=True)
            print("fake evaluator ready", file=sys.stderr, flush=True)
        elif kind == "eval":
            if args.behave == "slow":
                time.sleep(5)
            if args.behave == "error-reply":
                reply = {"type": "error", "id": msg["id"], "message": "synthetic failure"}
            elif args.behave == "nan":
                reply = {"type": "result", "id": msg["id"], "objective": float("nan")}
            elif args.behave == "unknown-type":
                reply = {"type": "telemetry", "id": msg["id"]}
            else:
                value = sum(
                    float(v) ** 2
                    for v in msg["params"].values()
                    if isinstance(v, (int, float))
                )
                reply = {"type": "result", "id": msg["id"], "objective": value}
            print(json.dumps(reply), flush=True)
            replied += 1
            if args.behave == "crash-after" and replied >= 1:
                return 3
        elif kind == "shutdown":
            return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
