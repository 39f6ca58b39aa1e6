"""Objective functions, evaluation accounting, and external evaluators.

Everything here minimizes. Accuracy-style objectives must be registered
pre-wrapped as 1 - accuracy so that lower is always better and fitness
stays on its positive branch.

The evaluation ledger records every objective call the engine sees, in
call order, with a monotone count. There is no caching: revisiting a
position evaluates and counts it again, both because call counts are the
quantity the engine's budget accounting asserts and because real tuning
objectives are rarely deterministic across resampled splits.

External evaluators are child processes speaking a line-delimited JSON
protocol (version 1) over stdin/stdout:

    engine -> evaluator  {"type":"hello","version":1,"space":[...]}
    evaluator -> engine  {"type":"ready","version":1}
    engine -> evaluator  {"type":"eval","id":7,"params":{"x":0.5}}
    evaluator -> engine  {"type":"result","id":7,"objective":0.125}
                     or  {"type":"error","id":7,"message":"..."}
    engine -> evaluator  {"type":"shutdown"}

Evaluator stderr is inherited, so it lands in the harness log.
"""

from __future__ import annotations

import hashlib
import json
import math
import queue
import struct
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .space import Position, SearchSpace, Value, fitness_from_objective

PROTOCOL_VERSION = 1

# scalar objective -> fitness transform, housed here as the public name
fitness = fitness_from_objective

ObjectiveFn = Callable[[Position], float]


class EvaluationError(RuntimeError):
    """An objective call failed (timeout, crash, error reply, bad reply)."""

    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


class ProtocolError(EvaluationError):
    """The evaluator violated the wire protocol (bad type, id, or value)."""


@dataclass(frozen=True)
class EvaluationRecord:
    position: Position
    objective: float
    duration: float
    iteration: int


class EvaluationLedger:
    """Append-only record of objective calls with a thread-safe count."""

    def __init__(self) -> None:
        self._records: list[EvaluationRecord] = []
        self._lock = threading.Lock()

    def append(self, record: EvaluationRecord) -> None:
        with self._lock:
            self._records.append(record)

    @property
    def count(self) -> int:
        with self._lock:
            return len(self._records)

    @property
    def records(self) -> tuple[EvaluationRecord, ...]:
        with self._lock:
            return tuple(self._records)


# ---------------------------------------------------------------------------
# Builtin benchmarks
# ---------------------------------------------------------------------------


def _numeric(values: Position) -> list[float]:
    out = []
    for v in values:
        if isinstance(v, str):
            raise EvaluationError("builtin benchmarks need numeric dimensions")
        out.append(float(v))
    return out


def sphere(values: Position) -> float:
    xs = _numeric(values)
    return sum(x * x for x in xs)


def rastrigin(values: Position) -> float:
    xs = _numeric(values)
    return 10.0 * len(xs) + sum(x * x - 10.0 * math.cos(2.0 * math.pi * x) for x in xs)


def rosenbrock(values: Position) -> float:
    xs = _numeric(values)
    return sum(
        100.0 * (xs[i + 1] - xs[i] ** 2) ** 2 + (1.0 - xs[i]) ** 2
        for i in range(len(xs) - 1)
    )


def make_noisy_sphere(sigma: float = 0.1, noise_seed: int = 0) -> ObjectiveFn:
    """Sphere plus Gaussian noise that is a fixed function of the position.

    The noise is drawn from a generator keyed on (noise_seed, position), so
    repeated evaluation of the same position returns the same value while
    distinct positions see independent-looking noise.
    """

    def noisy_sphere(values: Position) -> float:
        base = sphere(values)
        key = repr(tuple(values)).encode() + struct.pack("<q", noise_seed)
        digest = hashlib.blake2b(key, digest_size=8).digest()
        sub = np.random.default_rng(int.from_bytes(digest, "little"))
        return base + sigma * float(sub.standard_normal())

    return noisy_sphere


BenchmarkFactory = Callable[[Mapping], ObjectiveFn]

_BENCHMARKS: dict[str, BenchmarkFactory] = {
    "sphere": lambda options: sphere,
    "rastrigin": lambda options: rastrigin,
    "rosenbrock": lambda options: rosenbrock,
    "noisy_sphere": lambda options: make_noisy_sphere(
        sigma=float(options.get("sigma", 0.1)),
        noise_seed=int(options.get("noise_seed", 0)),
    ),
}


def register_benchmark(name: str, factory: BenchmarkFactory) -> None:
    """Register a named objective; factory(options) returns the function."""
    _BENCHMARKS[name] = factory


def benchmark_names() -> tuple[str, ...]:
    return tuple(sorted(_BENCHMARKS))


# ---------------------------------------------------------------------------
# Objective specification and evaluators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveSpec:
    """What to evaluate: a builtin benchmark or an external command.

    Direction is always minimize. The timeout and worker count apply to
    external evaluators only; workers sets how many child processes may
    evaluate concurrently (one session per worker).
    """

    kind: str  # "builtin" | "external"
    function: str | None = None
    options: Mapping = field(default_factory=dict)
    command: tuple[str, ...] | None = None
    timeout: float = 60.0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind == "builtin":
            if not self.function:
                raise ValueError("builtin objective needs a function name")
            if self.function not in _BENCHMARKS:
                raise ValueError(
                    f"unknown builtin objective {self.function!r}; "
                    f"known: {', '.join(benchmark_names())}"
                )
            if self.command is not None:
                raise ValueError("builtin objective takes no command")
        elif self.kind == "external":
            if not self.command:
                raise ValueError("external objective needs a command")
            if self.function is not None:
                raise ValueError("external objective takes no function name")
            object.__setattr__(self, "command", tuple(self.command))
        else:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        object.__setattr__(self, "options", dict(self.options))

    @classmethod
    def builtin(cls, function: str, **options) -> "ObjectiveSpec":
        return cls(kind="builtin", function=function, options=options)

    @classmethod
    def external(
        cls, command: Sequence[str], timeout: float = 60.0, workers: int = 1
    ) -> "ObjectiveSpec":
        return cls(kind="external", command=tuple(command), timeout=timeout, workers=workers)


class BuiltinEvaluator:
    """Evaluates a pure in-process objective function."""

    def __init__(self, fn: ObjectiveFn):
        self._fn = fn

    def evaluate_many(
        self, positions: Sequence[Position], ledger: EvaluationLedger, iteration: int = 0
    ) -> list[float]:
        results = []
        for position in positions:
            start = time.perf_counter()
            value = float(self._fn(tuple(position)))
            duration = time.perf_counter() - start
            if not math.isfinite(value):
                raise EvaluationError(f"objective returned non-finite value {value!r}")
            ledger.append(EvaluationRecord(tuple(position), value, duration, iteration))
            results.append(value)
        return results

    def evaluate(
        self, position: Position, ledger: EvaluationLedger, iteration: int = 0
    ) -> float:
        return self.evaluate_many([position], ledger, iteration)[0]

    def close(self) -> None:
        pass

    def __enter__(self) -> "BuiltinEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


_EOF = object()


class _Session:
    """One child evaluator process plus its reader thread."""

    def __init__(self, command: Sequence[str], space: SearchSpace, timeout: float):
        self.command = tuple(command)
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,  # inherit: evaluator stderr goes to the harness log
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EvaluationError(f"failed to spawn evaluator {self.command}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._closed = False
        self._send({"type": "hello", "version": PROTOCOL_VERSION, "space": space.to_wire()})
        reply = self._recv(timeout)
        if reply.get("type") != "ready":
            raise ProtocolError(
                f"expected ready handshake, got {reply.get('type')!r}", raw=json.dumps(reply)
            )
        if reply.get("version") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"evaluator speaks protocol version {reply.get('version')!r}, "
                f"engine needs {PROTOCOL_VERSION}",
                raw=json.dumps(reply),
            )

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            status = self._proc.poll()
            raise EvaluationError(
                f"evaluator pipe closed (exit status {status}): {exc}"
            ) from exc

    def _recv(self, timeout: float) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            self._proc.kill()
            raise EvaluationError(f"evaluator reply timed out after {timeout}s") from None
        if line is _EOF:
            status = self._proc.wait()
            raise EvaluationError(f"evaluator exited with status {status}")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"unparseable evaluator reply: {exc}", raw=line) from exc
        if not isinstance(message, dict):
            raise EvaluationError("evaluator reply is not an object", raw=line)
        return message

    def call(self, request_id: int, params: dict, timeout: float) -> float:
        self._send({"type": "eval", "id": request_id, "params": params})
        reply = self._recv(timeout)
        kind = reply.get("type")
        raw = json.dumps(reply)
        if kind == "error":
            raise EvaluationError(
                f"evaluator error for request {request_id}: {reply.get('message')}", raw=raw
            )
        if kind != "result":
            raise ProtocolError(f"unknown reply type {kind!r}", raw=raw)
        if reply.get("id") != request_id:
            raise ProtocolError(
                f"reply id {reply.get('id')!r} does not match request id {request_id}", raw=raw
            )
        value = reply.get("objective")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError(f"objective is not a number: {value!r}", raw=raw)
        value = float(value)
        if not math.isfinite(value):
            raise ProtocolError(f"objective is not finite: {value!r}", raw=raw)
        return value

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        if self._proc.poll() is None:
            try:
                self._send({"type": "shutdown"})
                self._proc.stdin.close()
            except EvaluationError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    @property
    def returncode(self) -> int | None:
        return self._proc.poll()


class ExternalEvaluator:
    """A pool of evaluator sessions sharing one request-id sequence.

    Request ids are assigned in submission order by the coordinator, so a
    given run issues the same ids for the same positions regardless of how
    many workers carry them.
    """

    def __init__(
        self,
        command: Sequence[str],
        space: SearchSpace,
        timeout: float = 60.0,
        workers: int = 1,
    ):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.space = space
        self.timeout = timeout
        self._sessions: list[_Session] = []
        self._idle: queue.Queue = queue.Queue()
        self._next_id = 1
        self._id_lock = threading.Lock()
        try:
            for _ in range(workers):
                session = _Session(command, space, timeout)
                self._sessions.append(session)
                self._idle.put(session)
        except Exception:
            self.close()
            raise

    def _take_id(self) -> int:
        with self._id_lock:
            request_id = self._next_id
            self._next_id += 1
            return request_id

    def _call(self, request_id: int, position: Position) -> tuple[float, float]:
        params = self.space.params_dict(position)
        session = self._idle.get()
        try:
            start = time.perf_counter()
            value = session.call(request_id, params, self.timeout)
            return value, time.perf_counter() - start
        finally:
            self._idle.put(session)

    def evaluate_many(
        self, positions: Sequence[Position], ledger: EvaluationLedger, iteration: int = 0
    ) -> list[float]:
        positions = [tuple(p) for p in positions]
        ids = [self._take_id() for _ in positions]
        if len(self._sessions) == 1 or len(positions) <= 1:
            outcomes = [self._call(i, p) for i, p in zip(ids, positions)]
        else:
            with ThreadPoolExecutor(max_workers=len(self._sessions)) as pool:
                futures = [pool.submit(self._call, i, p) for i, p in zip(ids, positions)]
                outcomes = [f.result() for f in futures]
        results = []
        for position, (value, duration) in zip(positions, outcomes):
            ledger.append(EvaluationRecord(position, value, duration, iteration))
            results.append(value)
        return results

    def evaluate(
        self, position: Position, ledger: EvaluationLedger, iteration: int = 0
    ) -> float:
        return self.evaluate_many([position], ledger, iteration)[0]

    def close(self) -> None:
        for session in self._sessions:
            session.close()

    @property
    def returncodes(self) -> list[int | None]:
        return [s.returncode for s in self._sessions]

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def spawn_external(
    command: Sequence[str],
    space: SearchSpace,
    timeout: float = 60.0,
    workers: int = 1,
) -> ExternalEvaluator:
    """Start external evaluator processes and complete the handshake."""
    return ExternalEvaluator(command, space, timeout=timeout, workers=workers)


def make_evaluator(
    spec: ObjectiveSpec, space: SearchSpace | None = None
) -> BuiltinEvaluator | ExternalEvaluator:
    """Build a ready-to-use evaluator for an objective spec."""
    if spec.kind == "builtin":
        return BuiltinEvaluator(_BENCHMARKS[spec.function](spec.options))
    if space is None:
        raise ValueError("external objectives need the search space for the handshake")
    return spawn_external(spec.command, space, timeout=spec.timeout, workers=spec.workers)


def evaluate(
    position: Position,
    spec: ObjectiveSpec,
    ledger: EvaluationLedger,
    space: SearchSpace | None = None,
    iteration: int = 0,
) -> float:
    """One-shot evaluation of a single position.

    For external objectives this spawns a fresh session per call, which is
    correct but slow; long runs should hold a single evaluator instead.
    """
    with make_evaluator(spec, space) as ev:
        return ev.evaluate(tuple(position), ledger, iteration)
