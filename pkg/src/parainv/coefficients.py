"""Coefficient matrices of the second-order system ``u_t = sum A_jk u_jk + sum A_j u_j``.

A :class:`CoefficientField` is either constant (plain arrays) or variable,
in which case it wraps callables ``(x, t) -> array``. Variable fields may be
built from the small arithmetic expressions accepted in config files; see
:func:`compile_expression`.
"""

from __future__ import annotations

import ast
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import InputError

SYMMETRY_TOL = 1e-12


def matrix_label(ident: tuple) -> str:
    """``(1, 2) -> 'A[1,2]'``, ``(1,) -> 'A[1]'`` (1-based)."""
    return "A[" + ",".join(str(i) for i in ident) + "]"


class CoefficientField:
    """The matrices ``A_jk`` (shape ``(n, n, m, m)``) and ``A_j`` (``(n, m, m)``).

    Use :meth:`constant` or :meth:`variable` rather than calling the
    constructor directly. Variable callables receive ``x`` with shape
    ``(..., n)`` and a scalar ``t`` and must return arrays with shape
    ``(..., n, n, m, m)`` and ``(..., n, m, m)``.
    """

    def __init__(self, n, m, second, first, *, constant, time_dependent):
        self.n = int(n)
        self.m = int(m)
        self._second = second
        self._first = first
        self.is_constant = bool(constant)
        self.time_dependent = bool(time_dependent)

    @classmethod
    def constant(cls, second, first=None) -> "CoefficientField":
        A2 = np.asarray(second, dtype=float)
        if A2.ndim != 4 or A2.shape[0] != A2.shape[1] or A2.shape[2] != A2.shape[3]:
            raise InputError(f"second-order coefficients need shape (n, n, m, m), got {A2.shape}")
        n, m = A2.shape[0], A2.shape[2]
        if n < 1 or m < 1:
            raise InputError("n and m must be positive")
        if first is None:
            A1 = np.zeros((n, m, m))
        else:
            A1 = np.asarray(first, dtype=float)
            if A1.shape != (n, m, m):
                raise InputError(f"first-order coefficients need shape {(n, m, m)}, got {A1.shape}")
        if not (np.all(np.isfinite(A2)) and np.all(np.isfinite(A1))):
            raise InputError("coefficients have non-finite entries")
        _check_symmetric(A2)
        A2 = A2.copy()
        A1 = A1.copy()
        A2.setflags(write=False)
        A1.setflags(write=False)
        return cls(n, m, A2, A1, constant=True, time_dependent=False)

    @classmethod
    def variable(cls, n, m, second: Callable, first: Optional[Callable] = None,
                 *, time_dependent=True) -> "CoefficientField":
        """Coefficients given as callables; symmetry is checked on every evaluation."""
        if first is None:
            def first(x, t):
                return np.zeros(np.shape(x)[:-1] + (n, m, m))
        return cls(n, m, second, first, constant=False, time_dependent=time_dependent)

    def second_order(self, x=None, t=0.0) -> np.ndarray:
        if self.is_constant:
            if x is None:
                return self._second
            lead = np.shape(x)[:-1]
            return np.broadcast_to(self._second, lead + self._second.shape)
        X = self._points(x)
        A2 = np.asarray(self._second(X, float(t)), dtype=float)
        expected = X.shape[:-1] + (self.n, self.n, self.m, self.m)
        if A2.shape != expected:
            A2 = np.broadcast_to(A2, expected)
        _check_symmetric(A2)
        return A2

    def first_order(self, x=None, t=0.0) -> np.ndarray:
        if self.is_constant:
            if x is None:
                return self._first
            lead = np.shape(x)[:-1]
            return np.broadcast_to(self._first, lead + self._first.shape)
        X = self._points(x)
        A1 = np.asarray(self._first(X, float(t)), dtype=float)
        expected = X.shape[:-1] + (self.n, self.m, self.m)
        if A1.shape != expected:
            A1 = np.broadcast_to(A1, expected)
        return A1

    def _points(self, x):
        if x is None:
            x = np.zeros(self.n)
        X = np.asarray(x, dtype=float)
        if X.shape[-1:] != (self.n,):
            raise InputError(f"x must have trailing dimension {self.n}, got shape {X.shape}")
        return X

    def matrices(self, x=None, t=0.0) -> Iterator[tuple[tuple, np.ndarray]]:
        """Yield ``(ident, matrix)`` for each distinct coefficient at one point.

        Idents are 1-based: ``(j, k)`` with ``j <= k`` for second order and
        ``(j,)`` for first order.
        """
        if x is not None and np.ndim(x) != 1:
            raise InputError("matrices() takes a single point x")
        A2 = self.second_order(x, t)
        A1 = self.first_order(x, t)
        for j in range(self.n):
            for k in range(j, self.n):
                yield (j + 1, k + 1), np.asarray(A2[j, k])
        for j in range(self.n):
            yield (j + 1,), np.asarray(A1[j])

    def scaled(self, c: float) -> "CoefficientField":
        if self.is_constant:
            return CoefficientField.constant(c * self._second, c * self._first)
        s, f = self._second, self._first
        return CoefficientField.variable(
            self.n, self.m,
            lambda x, t: c * np.asarray(s(x, t)),
            lambda x, t: c * np.asarray(f(x, t)),
            time_dependent=self.time_dependent,
        )

    def __repr__(self):
        kind = "constant" if self.is_constant else ("t-dependent" if self.time_dependent else "x-dependent")
        return f"CoefficientField(n={self.n}, m={self.m}, {kind})"


def _check_symmetric(A2):
    swapped = np.swapaxes(A2, -3, -4)
    if not np.allclose(A2, swapped, rtol=0.0, atol=SYMMETRY_TOL * (1 + np.max(np.abs(A2), initial=0.0))):
        raise InputError("second-order coefficients must satisfy A_jk = A_kj")


# ---------------------------------------------------------------------------
# expressions: + - * / parentheses, numeric literals, x1..xn, t

_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide}
_UNOPS = {ast.UAdd: np.positive, ast.USub: np.negative}


def compile_expression(text: str, n: int) -> tuple[Callable, set]:
    """Compile an arithmetic expression over ``x1..xn`` and ``t``.

    Returns ``(fn, names)`` where ``fn(x, t)`` broadcasts over the leading
    axes of ``x`` and ``names`` is the set of variables that occur.
    """
    if not isinstance(text, str):
        raise InputError(f"expression must be a string, got {type(text).__name__}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse expression {text!r}: {exc.msg}") from None
    allowed = {"t"} | {f"x{i}" for i in range(1, n + 1)}
    names = set()

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name):
            if node.id not in allowed:
                raise InputError(f"unknown variable {node.id!r} in {text!r} (allowed: {sorted(allowed)})")
            names.add(node.id)
        else:
            raise InputError(f"unsupported syntax {type(node).__name__} in {text!r}")

    check(tree)

    def evaluate(node, env):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, env), evaluate(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](evaluate(node.operand, env))
        if isinstance(node, ast.Constant):
            return float(node.value)
        return env[node.id]

    def fn(x, t):
        X = np.asarray(x, dtype=float)
        env = {"t": float(t)}
        for i in range(n):
            env[f"x{i + 1}"] = X[..., i]
        with np.errstate(divide="raise", invalid="raise"):
            try:
                value = evaluate(tree, env)
            except FloatingPointError as exc:
                raise InputError(f"expression {text!r} failed to evaluate: {exc}") from None
        return np.broadcast_to(np.asarray(value, dtype=float), X.shape[:-1])

    return fn, names


def matrix_function(entries: Sequence[Sequence], n: int, m: int) -> tuple[Callable, bool, bool]:
    """Turn a nested ``m x m`` list of numbers/expressions into ``f(x, t) -> (..., m, m)``.

    Returns ``(fn, is_constant, uses_t)``.
    """
    rows = list(entries)
    if len(rows) != m or any(len(r) != m for r in rows):
        raise InputError(f"matrix must be {m}x{m}")
    compiled = []
    constant = True
    uses_t = False
    for r in rows:
        row = []
        for e in r:
            if isinstance(e, str):
                f, names = compile_expression(e, n)
                constant = False
                uses_t = uses_t or "t" in names
                row.append(f)
            elif isinstance(e, (int, float)) and not isinstance(e, bool):
                row.append(float(e))
            else:
                raise InputError(f"matrix entry {e!r} is neither a number nor an expression")
        compiled.append(row)

    def fn(x, t):
        X = np.asarray(x, dtype=float)
        out = np.empty(X.shape[:-1] + (m, m))
        for a in range(m):
            for b in range(m):
                e = compiled[a][b]
                out[..., a, b] = e(X, t) if callable(e) else e
        return out

    return fn, constant, uses_t
