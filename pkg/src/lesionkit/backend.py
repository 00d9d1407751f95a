"""Adapter to an external classifier over a line protocol.

The backend is any executable that reads one image path per line on
stdin and answers one line of 9 comma-separated confidences, in request
order. A reader thread feeds a queue so each answer can be awaited with
a per-image timeout; protocol violations abort with the offending line
in the message.
"""

import queue
import subprocess
import threading

import numpy as np

from .categories import N_CATEGORIES
from .datamodel import PredictionSet
from .exceptions import BackendProtocolError
from .io import image_id_from_path

_EOF = object()


def _pump(stream, out: queue.Queue) -> None:
    for line in stream:
        out.put(line)
    out.put(_EOF)


def run_backend(command, paths, timeout: float = 30.0) -> np.ndarray:
    """Query the backend for every path; returns an (n, 9) matrix."""
    paths = list(paths)
    if timeout <= 0:
        raise ValueError(f"timeout must be positive, got {timeout}")
    try:
        proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
    except OSError as exc:
        raise BackendProtocolError(f"cannot start backend {command!r}: {exc}") from exc

    answers: queue.Queue = queue.Queue()
    reader = threading.Thread(target=_pump, args=(proc.stdout, answers), daemon=True)
    reader.start()
    values = np.empty((len(paths), N_CATEGORIES), dtype=np.float64)
    try:
        for i, path in enumerate(paths):
            try:
                proc.stdin.write(str(path) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError):
                raise BackendProtocolError(
                    f"backend exited before accepting request: {path}"
                ) from None
            try:
                line = answers.get(timeout=timeout)
            except queue.Empty:
                raise BackendProtocolError(
                    f"backend timed out after {timeout}s on request: {path}"
                ) from None
            if line is _EOF:
                raise BackendProtocolError(f"backend exited before answering: {path}")
            values[i] = _parse_answer(line)
    finally:
        _shutdown(proc)
    return values


def _parse_answer(line: str) -> np.ndarray:
    stripped = line.rstrip("\n").rstrip("\r")
    parts = stripped.split(",")
    if len(parts) != N_CATEGORIES:
        raise BackendProtocolError(
            f"expected {N_CATEGORIES} comma-separated values, got {len(parts)}: {stripped!r}"
        )
    try:
        row = np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise BackendProtocolError(f"non-numeric confidence in line: {stripped!r}") from None
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise BackendProtocolError(f"confidences must be finite and >= 0: {stripped!r}")
    return row


def _shutdown(proc: subprocess.Popen) -> None:
    try:
        if proc.stdin and not proc.stdin.closed:
            proc.stdin.close()
    except OSError:
        pass
    try:
        proc.wait(timeout=5)
    except subprocess.TimeoutExpired:
        proc.kill()
        proc.wait()


def infer_paths(command, paths, timeout: float = 30.0) -> PredictionSet:
    """run_backend + id assembly; row order follows the path order."""
    values = run_backend(command, paths, timeout=timeout)
    ids = tuple(image_id_from_path(p) for p in paths)
    return PredictionSet(image_ids=ids, values=values)
