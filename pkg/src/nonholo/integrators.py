"""Explicit Runge-Kutta integrators and the trajectory container.

``rk4`` is the classical fixed-step scheme. ``rkf45`` is the Fehlberg 4(5)
embedded pair with the classical tableau; the step is accepted on the
difference of the two solutions and the fifth-order one is propagated
(local extrapolation).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .symcore import SingularPointError

COMPLETED = "completed"
SINGULAR_POINT = "singular_point"
STEP_LIMIT = "step_limit"
BRANCH_LOSS = "branch_loss"

SCHEMA = "nonholo/1"

# Fehlberg tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rkf45"
    step: float = 1e-2
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 1_000_000
    s_end: float = 1.0

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.step > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("step and tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not self.s_end > 0:
            raise ValueError("s_end must be positive")


@dataclass
class Trajectory:
    s: np.ndarray
    states: np.ndarray
    labels: tuple
    monitors: dict = field(default_factory=dict)
    termination: str = COMPLETED

    def __len__(self):
        return len(self.s)

    def column(self, name: str) -> np.ndarray:
        if name in self.monitors:
            return self.monitors[name]
        return self.states[:, self.labels.index(name)]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, target=None) -> str:
        """Header row, one row per sample, termination reason as a trailing comment."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        mons = list(self.monitors)
        w.writerow(["s", *self.labels, *mons])
        for n in range(len(self.s)):
            row = [repr(float(self.s[n]))] + [repr(float(v)) for v in self.states[n]]
            row += [repr(float(self.monitors[m][n])) for m in mons]
            w.writerow(row)
        buf.write(f"# schema: {SCHEMA}\n# termination: {self.termination}\n")
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w", encoding="utf-8") as fh:
                    fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, labels=None) -> "Trajectory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        term = COMPLETED
        rows = []
        for ln in lines:
            if ln.startswith("#"):
                if ln.startswith("# termination:"):
                    term = ln.split(":", 1)[1].strip()
                continue
            rows.append(ln)
        header, *data = list(csv.reader(rows))
        arr = np.array([[float(v) for v in r] for r in data]).reshape(len(data), len(header))
        labels = tuple(labels) if labels else tuple(header[1:])
        nstate = len(labels)
        mons = {h: arr[:, 1 + nstate + i] for i, h in enumerate(header[1 + nstate:])}
        return cls(arr[:, 0], arr[:, 1:1 + nstate], labels, mons, term)


def rk4_step(f, s, y, h):
    k1 = f(s, y)
    k2 = f(s + h / 2, y + h / 2 * k1)
    k3 = f(s + h / 2, y + h / 2 * k2)
    k4 = f(s + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rkf45_step(f, s, y, h):
    """One Fehlberg step; returns the fourth- and fifth-order solutions."""
    k = []
    for i in range(6):
        yi = y
        for a, kj in zip(_A[i], k):
            yi = yi + h * a * kj
        k.append(f(s + _C[i] * h, yi))
    k = np.array(k)
    return y + h * (_B4 @ k), y + h * (_B5 @ k)


def integrate(
    rhs: Callable,
    y0,
    cfg: IntegratorConfig,
    labels,
    *,
    monitors: dict | None = None,
    singular: Callable | None = None,
    s_eval=None,
) -> Trajectory:
    """Integrate ``y' = rhs(s, y)`` from ``s = 0`` to ``cfg.s_end``.

    ``monitors`` maps names to ``fn(s, y) -> float`` recorded at each sample.
    ``singular(y) -> bool`` stops the run with ``singular_point``. With
    ``s_eval`` the step sequence lands on every requested abscissa and only
    those are recorded; otherwise every accepted step is recorded.
    """
    monitors = monitors or {}
    y = np.asarray(y0, dtype=float).copy()
    s = 0.0
    end = cfg.s_end
    targets = None
    if s_eval is not None:
        targets = [t for t in np.asarray(s_eval, dtype=float) if 0.0 < t <= end + 1e-15]
        end = max(targets) if targets else 0.0
    ss, ys = [s], [y.copy()]
    mon = {k: [fn(s, y)] for k, fn in monitors.items()}
    termination = COMPLETED

    def record(s_, y_):
        ss.append(s_)
        ys.append(y_.copy())
        for k, fn in monitors.items():
            mon[k].append(fn(s_, y_))

    if singular is not None and singular(y):
        termination = SINGULAR_POINT
        end = s
    h = min(cfg.step, end) if end > 0 else 0.0
    steps = 0
    ti = 0
    while s < end * (1 - 1e-15) - 1e-300:
        if steps >= cfg.max_steps:
            termination = STEP_LIMIT
            break
        stop = targets[ti] if targets else end
        h_try = min(h, stop - s)
        if stop - s - h_try < 1e-12 * max(1.0, abs(stop)):
            h_try = stop - s
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                if cfg.method == "rk4":
                    y_new = rk4_step(rhs, s, y, h_try)
                    accepted, err = True, 0.0
                else:
                    y4, y5 = rkf45_step(rhs, s, y, h_try)
                    sc = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y4))
                    err = float(np.max(np.abs(y5 - y4) / sc))
                    accepted = err <= 1.0
                    y_new = y5
        except (SingularPointError, FloatingPointError, ZeroDivisionError, OverflowError):
            if cfg.method == "rkf45" and h_try > 1e-14:
                h = h_try / 4
                steps += 1
                continue
            termination = SINGULAR_POINT
            break
        steps += 1
        if cfg.method == "rkf45":
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h_next = h_try * fac
        else:
            h_next = h
        if not accepted:
            h = h_next
            if h < 1e-14 * max(1.0, abs(s)):
                termination = SINGULAR_POINT
                break
            continue
        if not np.all(np.isfinite(y_new)):
            termination = SINGULAR_POINT
            break
        s_new = stop if h_try == stop - s else s + h_try
        # the flagged state is not recorded: monitors may not be evaluable there
        if singular is not None and singular(y_new):
            termination = SINGULAR_POINT
            break
        y = y_new
        s = s_new
        if targets is None:
            record(s, y)
        elif s >= targets[ti]:
            record(s, y)
            ti += 1
            if ti >= len(targets):
                break
        if cfg.method == "rkf45":
            h = h_next
    return Trajectory(
        np.array(ss),
        np.array(ys),
        tuple(labels),
        {k: np.array(v) for k, v in mon.items()},
        termination,
    )
