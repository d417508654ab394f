"""Run configuration: JSON document, defaults and the expression grammar.

Schema (every key optional; the defaults reproduce the prototype problem)::

    {
      "nfun":   {"family": "power", "params": [3]}
                | {"family": "tabulated", "csv": "density.csv"},
      "s": 0.5, "d": 1, "s_prime": 0.25,
      "domain": {"lo": -6, "hi": 6, "n": 64},
      "V": "1 + x**2",            # expression, or {"csv": "V.csv"}
      "xi": "exp(-x**2)",
      "p": 1.5, "mu": 2, "lambda": 1,
      "functions": 20,            # verify: random test functions
      "seeds": 40, "count_target": 3,
      "k_max": 8, "theta": 2.5, "fountain_k": [2, 3, 4],
      "compare": [ <nfun>, ... ], # nfun: essentially-stronger checks
      "embed": {"nfun": {...}, "s": 0.3, "domain": {...},
                "count": 50, "grids": [64, 128], "half_widths": [1, 2, 4]},
      "operator": {"nfun": {...}, "s": 0.5, "domain": {...},
                   "u": "gaussian(x, 0.4)", "v": "hat(x)"}
    }

Expressions may use numbers, the coordinates ``x`` (= ``x1``) and ``x2``,
the operators ``+ - * / **``, unary minus and the functions ``exp``,
``gaussian(z, width=1) = exp(-(z/width)**2)`` and ``hat(z) = max(0, 1-|z|)``.
"""

from __future__ import annotations

import ast
import copy
import hashlib
import json
import operator as op
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError
from .grid import BoxDomain, GridFunction
from .nfunc import NFunctionSpec, spec_from_dict

DEFAULTS = {
    "nfun": {"family": "power", "params": [3]},
    "s": 0.5,
    "d": 1,
    "s_prime": 0.25,
    "domain": {"lo": -6.0, "hi": 6.0, "n": 64},
    "V": "1 + x**2",
    "xi": "exp(-x**2)",
    "p": 1.5,
    "mu": 2.0,
    "lambda": 1.0,
    "functions": 20,
    "seeds": 40,
    "count_target": 3,
    "k_max": 8,
    "theta": 2.5,
    "fountain_k": [2, 3, 4],
    "compare": [],
    "embed": {"nfun": {"family": "power", "params": [2]}, "s": 0.3,
              "domain": {"lo": 0.0, "hi": 1.0, "n": 64},
              "count": 50, "grids": [64, 128], "half_widths": [1.0, 2.0, 4.0]},
    "operator": {"nfun": {"family": "power", "params": [2]}, "s": 0.5,
                 "domain": {"lo": -4.0, "hi": 4.0, "n": 128},
                 "u": "gaussian(x, 0.4)", "v": "hat(x)"},
}

_BINOPS = {ast.Add: op.add, ast.Sub: op.sub, ast.Mult: op.mul, ast.Div: op.truediv,
           ast.Pow: op.pow}
_UNARY = {ast.USub: op.neg, ast.UAdd: op.pos}


def _gaussian(z, width=1.0):
    return np.exp(-(z / width) ** 2)


def _hat(z):
    return np.maximum(0.0, 1.0 - np.abs(z))


_FUNCS = {"exp": np.exp, "gaussian": _gaussian, "hat": _hat}


class Expression:
    """A parsed, whitelisted arithmetic expression in the grid coordinates."""

    def __init__(self, text: str):
        if not isinstance(text, str) or not text.strip():
            raise InvalidSpecError("expression must be a nonempty string")
        self.text = text
        try:
            self.tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise InvalidSpecError(f"cannot parse expression {text!r}: {exc.msg}") from None
        self._check(self.tree.body)

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise InvalidSpecError(f"{self.text!r}: only numeric constants are allowed")
        elif isinstance(node, ast.Name):
            if node.id not in ("x", "x1", "x2"):
                raise InvalidSpecError(f"{self.text!r}: unknown name {node.id!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise InvalidSpecError(f"{self.text!r}: operator not allowed")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise InvalidSpecError(f"{self.text!r}: operator not allowed")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise InvalidSpecError(f"{self.text!r}: only exp, gaussian and hat may be called")
            for a in node.args:
                self._check(a)
        else:
            raise InvalidSpecError(f"{self.text!r}: {type(node).__name__} is not allowed")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise InvalidSpecError(f"{self.text!r}: {node.id} is not defined in d = 1")
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](*(self._eval(a, env) for a in node.args))

    def sample(self, domain: BoxDomain) -> GridFunction:
        pts = domain.points
        env = {"x": pts[:, 0], "x1": pts[:, 0]}
        if domain.d == 2:
            env["x2"] = pts[:, 1]
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(self._eval(self.tree.body, env), dtype=float),
                                   (domain.size,)).copy()
        if not np.all(np.isfinite(vals)):
            raise InvalidSpecError(f"{self.text!r} is not finite on the grid")
        return GridFunction(domain, vals)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("nfun",):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _domain(d: int, spec: dict) -> BoxDomain:
    lo, hi = spec["lo"], spec["hi"]
    lo = tuple(np.broadcast_to(np.asarray(lo, dtype=float), (d,)))
    hi = tuple(np.broadcast_to(np.asarray(hi, dtype=float), (d,)))
    return BoxDomain(d, lo, hi, int(spec["n"]))


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        user = {}
        base = Path.cwd()
        if path is not None:
            path = Path(path)
            try:
                user = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidSpecError(f"cannot read config {path}: {exc}") from None
            if not isinstance(user, dict):
                raise InvalidSpecError("config must be a JSON object")
            base = path.parent
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise InvalidSpecError(f"unknown config keys: {sorted(unknown)}")
        raw = _merge(DEFAULTS, user)
        if overrides:
            raw = _merge(raw, overrides)
        return cls(raw, base)

    # identity -----------------------------------------------------------
    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def __getitem__(self, key):
        return self.raw[key]

    # typed views --------------------------------------------------------
    def nfun(self, spec: dict | None = None) -> NFunctionSpec:
        spec = spec if spec is not None else self.raw["nfun"]
        if not isinstance(spec, dict) or "family" not in spec:
            raise InvalidSpecError("nfun needs a 'family'")
        if spec["family"] == "tabulated" and "csv" in spec:
            from .io import read_density_csv
            rng = spec.get("eval_range")
            return read_density_csv(self.base_dir / spec["csv"],
                                    tuple(rng) if rng is not None else None)
        try:
            return spec_from_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"bad nfun spec {spec}: {exc}") from None

    @property
    def d(self) -> int:
        return int(self.raw["d"])

    def fp(self):
        from .sobolev import FractionalParams
        sp = self.raw.get("s_prime")
        return FractionalParams(float(self.raw["s"]), self.d,
                                None if sp is None else float(sp))

    def domain(self) -> BoxDomain:
        return _domain(self.d, self.raw["domain"])

    def operator_domain(self) -> BoxDomain:
        return _domain(self.d, self.raw["operator"]["domain"])

    def field(self, key: str, domain: BoxDomain) -> GridFunction:
        spec = self.raw[key]
        if isinstance(spec, dict) and "csv" in spec:
            from .io import read_grid_csv
            return read_grid_csv(self.base_dir / spec["csv"], domain)
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return domain.constant(float(spec))
        return Expression(spec).sample(domain)

    def expression(self, text: str, domain: BoxDomain) -> GridFunction:
        return Expression(text).sample(domain)

    def problem(self):
        from .variational.problem import ProblemSpec
        dom = self.domain()
        return ProblemSpec(nfun=self.nfun(), fp=self.fp(), domain=dom,
                           V=self.field("V", dom), xi=self.field("xi", dom),
                           p=float(self.raw["p"]), mu=float(self.raw["mu"]),
                           lam=float(self.raw["lambda"]),
                           labels={"V": str(self.raw["V"]), "xi": str(self.raw["xi"])})
