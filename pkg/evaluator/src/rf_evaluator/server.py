"""Line-delimited JSON request loop (protocol version 1).

One message per line on stdin, one reply per request on stdout:

    {"type":"hello","version":1,"space":[...]}  ->  {"type":"ready","version":1}
    {"type":"eval","id":N,"params":{...}}       ->  {"type":"result","id":N,"objective":F}
                                                or  {"type":"error","id":N,"message":S}
    {"type":"shutdown"}                         ->  exits 0

Bad input never kills the loop: malformed lines, unknown message types,
unknown parameter names, and training failures all produce an error
reply (id -1 when the request id is unknowable) and the loop continues.
"""

from __future__ import annotations

import json
import sys

PROTOCOL_VERSION = 1


def _reply(outstream, message: dict) -> None:
    outstream.write(json.dumps(message) + "\n")
    outstream.flush()


def _error(outstream, request_id, text: str) -> None:
    if not isinstance(request_id, int) or isinstance(request_id, bool):
        request_id = -1
    _reply(outstream, {"type": "error", "id": request_id, "message": text})


def serve(instream, outstream, scorer) -> int:
    """Answer requests until shutdown or end of input."""
    ready = False
    for line in instream:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            _error(outstream, -1, "malformed line: not valid JSON")
            continue
        if not isinstance(message, dict):
            _error(outstream, -1, "malformed line: expected an object")
            continue
        kind = message.get("type")

        if kind == "hello":
            version = message.get("version")
            if version != PROTOCOL_VERSION:
                _error(outstream, -1, f"unsupported protocol version {version!r}")
                continue
            ready = True
            _reply(outstream, {"type": "ready", "version": PROTOCOL_VERSION})
        elif kind == "eval":
            request_id = message.get("id")
            if not ready:
                _error(outstream, request_id, "handshake required before eval")
                continue
            params = message.get("params")
            if not isinstance(params, dict):
                _error(outstream, request_id, "eval needs a params object")
                continue
            try:
                objective = scorer.score(params, request_id=int(request_id))
            except Exception as exc:
                _error(outstream, request_id, str(exc))
                continue
            _reply(
                outstream,
                {"type": "result", "id": request_id, "objective": objective},
            )
        elif kind == "shutdown":
            return 0
        else:
            _error(outstream, message.get("id"), f"unknown message type {kind!r}")
    return 0


def serve_stdio(scorer) -> int:
    return serve(sys.stdin, sys.stdout, scorer)
