"""Model files.

A model file is YAML (JSON also parses)::

    states: [q1, q2]
    transitions:
      - {from: q1, to: q1, prob: 1/2, density: "Exp(2)"}
      - {from: q1, to: q2, prob: 1/2, density: "U(-1,0)"}
      - {from: q2, to: q1, prob: 1/3, density: "U(0,2)"}
      - {from: q2, to: q2, prob: 2/3, density: "Exp(1)"}
    distributions:
      start: {q1: 1}

Scalars are read from the YAML node tree as raw text, so ``1/2`` stays an
exact rational and ``0.5`` is rejected instead of silently becoming a float.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .hmm import ContinuousHMM, FiniteHMM, InitialDistribution
from .linalg import RMatrix
from .parser import ParseError, parse_profile, parse_rational
from .profiles import Discrete, ProfileExpr, canonicalize, format_profile, format_rational


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = "<model>"):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        loc = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(loc + message)


@dataclass
class Model:
    hmm: ContinuousHMM
    distributions: dict  # name -> InitialDistribution

    def distribution(self, name: str) -> InitialDistribution:
        """A named distribution, or the Dirac distribution on a state name."""
        if name in self.distributions:
            return self.distributions[name]
        if name in self.hmm.states:
            return InitialDistribution.dirac(self.hmm.states, name)
        raise KeyError(f"no distribution or state named {name!r}")


def _err(msg, node, source, offset=0):
    mark = node.start_mark
    raise ModelFileError(msg, mark.line + 1, mark.column + 1 + offset, source)


def _scalar(node, source, what):
    if not isinstance(node, yaml.ScalarNode):
        _err(f"{what} must be a scalar", node, source)
    return node.value


def _mapping(node, source, what):
    if not isinstance(node, yaml.MappingNode):
        _err(f"{what} must be a mapping", node, source)
    out = {}
    for k, v in node.value:
        key = _scalar(k, source, "key")
        if key in out:
            _err(f"duplicate key {key!r}", k, source)
        out[key] = (k, v)
    return out


def _sequence(node, source, what):
    if not isinstance(node, yaml.SequenceNode):
        _err(f"{what} must be a list", node, source)
    return node.value


def _rational(node, source, what):
    text = _scalar(node, source, what)
    try:
        return parse_rational(text)
    except ParseError as exc:
        quoted = 1 if node.style in ("'", '"') else 0
        _err(f"bad {what} {text!r}: {exc.message}", node, source, max(exc.column - 1, 0) + quoted)


def _profile(node, source):
    text = _scalar(node, source, "density")
    try:
        return parse_profile(text)
    except ParseError as exc:
        quoted = 1 if node.style in ("'", '"') else 0
        _err(f"bad density {text!r}: {exc.message}", node, source, max(exc.column - 1, 0) + quoted)


def loads(text: str, source: str = "<model>") -> Model:
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ModelFileError(f"YAML syntax error: {exc.problem}", mark.line + 1, mark.column + 1, source) from None
    if root is None:
        raise ModelFileError("empty model file", source=source)
    top = _mapping(root, source, "model")
    for key, (knode, _) in top.items():
        if key not in ("states", "transitions", "distributions"):
            _err(f"unknown top-level key {key!r}", knode, source)
    if "states" not in top:
        _err("missing 'states'", root, source)
    snodes = _sequence(top["states"][1], source, "states")
    states = []
    for sn in snodes:
        name = _scalar(sn, source, "state name")
        if name in states:
            _err(f"duplicate state {name!r}", sn, source)
        states.append(name)
    if not states:
        _err("at least one state required", top["states"][1], source)

    transitions = []
    tnodes = _sequence(top["transitions"][1], source, "transitions") if "transitions" in top else []
    for tn in tnodes:
        fields = _mapping(tn, source, "transition")
        for need in ("from", "to", "prob", "density"):
            if need not in fields:
                _err(f"transition missing {need!r}", tn, source)
        for key, (knode, _) in fields.items():
            if key not in ("from", "to", "prob", "density"):
                _err(f"unknown transition key {key!r}", knode, source)
        src = _scalar(fields["from"][1], source, "from")
        dst = _scalar(fields["to"][1], source, "to")
        for name, node in ((src, fields["from"][1]), (dst, fields["to"][1])):
            if name not in states:
                _err(f"unknown state {name!r}", node, source)
        prob = _rational(fields["prob"][1], source, "probability")
        prof = _profile(fields["density"][1], source)
        transitions.append((src, dst, prob, prof))
    hmm = ContinuousHMM.from_transitions(states, transitions)

    dists = {}
    if "distributions" in top:
        for name, (knode, vnode) in _mapping(top["distributions"][1], source, "distributions").items():
            weights = {}
            for st, (sk, sv) in _mapping(vnode, source, f"distribution {name!r}").items():
                if st not in states:
                    _err(f"unknown state {st!r}", sk, source)
                weights[st] = _rational(sv, source, "weight")
            try:
                dists[name] = InitialDistribution.from_mapping(states, weights)
            except ValueError as exc:
                _err(f"distribution {name!r}: {exc}", knode, source)
    return Model(hmm, dists)


def load(path) -> Model:
    path = Path(path)
    return loads(path.read_text(), source=str(path))


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dumps(hmm: ContinuousHMM, distributions: dict | None = None) -> str:
    """Serialise a model; the output re-parses with :func:`loads`."""
    lines = ["states: [" + ", ".join(_quote(str(q)) for q in hmm.states) + "]", "transitions:"]
    for i, j, p, prof in hmm.entries():
        lines.append(
            f"  - {{from: {_quote(str(hmm.states[i]))}, to: {_quote(str(hmm.states[j]))}, "
            f"prob: {_quote(format_rational(p))}, density: {_quote(format_profile(prof))}}}"
        )
    if not any(True for _ in hmm.entries()):
        lines[-1] = "transitions: []"
    if distributions:
        lines.append("distributions:")
        for name, pi in distributions.items():
            body = ", ".join(
                f"{_quote(str(q))}: {_quote(format_rational(w))}" for q, w in zip(hmm.states, pi.weights) if w
            )
            lines.append(f"  {_quote(name)}: {{{body}}}")
    return "\n".join(lines) + "\n"


def finite_as_continuous(f: FiniteHMM) -> ContinuousHMM:
    """Encode a finite HMM with ``Dirac(letter)`` densities.

    Entry ``(i, j)`` gets probability ``P[i, j]`` (``P`` the letter sum) and
    density ``sum_a M(a)[i, j] / P[i, j] * Dirac(a)``.
    """
    total = f.total()
    n = f.size
    psi = [[()] * n for _ in range(n)]
    for i, j, p in total.nonzeros():
        terms = tuple((m[i, j] / p, Discrete(a)) for a, m in zip(f.alphabet, f.matrices) if m[i, j])
        psi[i][j] = ((p, canonicalize(ProfileExpr(terms))),)
    return ContinuousHMM(f.states, tuple(tuple(r) for r in psi))


def continuous_as_finite(h: ContinuousHMM) -> FiniteHMM:
    """Read a model whose densities are all point masses as a finite HMM.

    The alphabet is the sorted set of symbols; ``M(a)[i, j]`` collects
    ``prob * coef`` of every ``Dirac(a)`` term on the edge.
    """
    cells = {}
    for i, j, p, prof in h.entries():
        for c, a in prof.terms:
            if not isinstance(a, Discrete):
                raise ValueError(f"density {format_profile(prof)} is not a combination of Dirac atoms")
            cells.setdefault(a.symbol, []).append((i, j, p * c))
    n = h.size
    alphabet = tuple(sorted(cells))
    return FiniteHMM(h.states, alphabet, tuple(RMatrix.from_entries(n, n, cells[a]) for a in alphabet))


BUNDLED = (
    "intro",
    "exp_uniform",
    "gaussian_labelling",
    "counterexample",
    "two_state",
    "timing_leak",
    "timing_padded",
)


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled model {name!r}; choose from {', '.join(BUNDLED)}")
    return resources.files("cohmm").joinpath("models", f"{name}.yaml").read_text()


def load_bundled(name: str) -> Model:
    return loads(bundled_text(name), source=f"{name}.yaml")
