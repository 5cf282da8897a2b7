"""Pre-trained surrogate model artifacts and their symbolic encodings.

Four kinds are supported, all loaded from JSON with exact rational weights
(numbers are read as decimal strings, and string weights like "0.2" or "1/3"
are accepted):

- polynomial: per-output sum of coeff * prod(feature ** power)
- tree:       binary decision tree, split `feature <= threshold` -> left
- forest:     list of trees, outputs averaged
- mlp:        fully connected layers with relu/linear activations,
              final layer linear

`eval_model` interprets the payload directly; `encode_model` builds the
symbolic form once and for all: per-output expressions over the feature
variables plus the model formula (output equalities, with one auxiliary
variable per ReLU neuron). Tests hold the two routes against each other.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    DimensionMismatchError,
    FeatureMismatchError,
    MalformedJsonError,
    ModelError,
    UnknownKindError,
)
from .intervals import Box, Interval, VarDomain, expr_interval
from .spec import ProblemSpec
from .terms import (
    Add,
    Assignment,
    Cmp,
    CmpOp,
    Const,
    Expr,
    Formula,
    Ite,
    Mul,
    Pow,
    Sort,
    Var,
    conj,
    evaluate,
    free_vars,
)

KINDS = ("polynomial", "tree", "forest", "mlp")


def _rational(x, where: str) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise ModelError(f"{where}: expected a rational, got {x!r}")
    try:
        if isinstance(x, str) and "/" in x:
            num, den = x.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"{where}: expected a rational, got {x!r}") from exc


@dataclass(frozen=True)
class PolyTerm:
    coeff: Fraction
    powers: tuple[int, ...]


@dataclass(frozen=True)
class TreeSplit:
    feature: int
    threshold: Fraction
    left: "TreeSplit | TreeLeaf"
    right: "TreeSplit | TreeLeaf"


@dataclass(frozen=True)
class TreeLeaf:
    values: tuple[Fraction, ...]


@dataclass(frozen=True)
class Layer:
    weights: tuple[tuple[Fraction, ...], ...]
    bias: tuple[Fraction, ...]
    activation: str  # "relu" | "linear"


@dataclass(frozen=True)
class ModelArtifact:
    kind: str
    features: tuple[str, ...]
    outputs: tuple[str, ...]
    payload: object

    def leaf_count(self) -> int:
        """Total leaves over all trees (tree/forest kinds)."""

        def count(node) -> int:
            if isinstance(node, TreeLeaf):
                return 1
            return count(node.left) + count(node.right)

        if self.kind == "tree":
            return count(self.payload)
        if self.kind == "forest":
            return sum(count(t) for t in self.payload)
        raise ModelError(f"leaf_count undefined for kind {self.kind!r}")

    def relu_count(self) -> int:
        if self.kind != "mlp":
            raise ModelError(f"relu_count undefined for kind {self.kind!r}")
        return sum(len(layer.bias) for layer in self.payload if layer.activation == "relu")


def _parse_tree(node, n_features: int, n_outputs: int, where: str):
    if not isinstance(node, dict):
        raise ModelError(f"{where}: expected an object")
    if "value" in node:
        values = node["value"]
        if not isinstance(values, list) or len(values) != n_outputs:
            raise DimensionMismatchError(f"{where}: leaf needs {n_outputs} values")
        return TreeLeaf(tuple(_rational(v, where) for v in values))
    try:
        feature = node["feature"]
        threshold = node["threshold"]
        left = node["left"]
        right = node["right"]
    except KeyError as exc:
        raise ModelError(f"{where}: missing key {exc.args[0]!r}") from None
    if not isinstance(feature, int) or not (0 <= feature < n_features):
        raise DimensionMismatchError(f"{where}: feature index {feature!r} out of range")
    return TreeSplit(
        feature,
        _rational(threshold, where),
        _parse_tree(left, n_features, n_outputs, where + ".left"),
        _parse_tree(right, n_features, n_outputs, where + ".right"),
    )


def parse_model(text: str) -> ModelArtifact:
    try:
        doc = json.loads(text, parse_float=lambda s: Fraction(s), parse_int=int)
    except json.JSONDecodeError as exc:
        raise MalformedJsonError(f"invalid model JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedJsonError("model: top level must be an object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise UnknownKindError(f"unknown model kind {kind!r}")
    features = doc.get("features")
    outputs = doc.get("outputs")
    if (
        not isinstance(features, list)
        or not features
        or not all(isinstance(f, str) for f in features)
    ):
        raise ModelError("model: features must be a nonempty list of labels")
    if (
        not isinstance(outputs, list)
        or not outputs
        or not all(isinstance(o, str) for o in outputs)
    ):
        raise ModelError("model: outputs must be a nonempty list of labels")
    if len(set(features)) != len(features) or len(set(outputs)) != len(outputs):
        raise ModelError("model: duplicate feature or output labels")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise ModelError("model: payload must be an object")

    nf, no = len(features), len(outputs)
    if kind == "polynomial":
        terms = payload.get("terms")
        if not isinstance(terms, list) or len(terms) != no:
            raise DimensionMismatchError(f"polynomial: need one term list per output ({no})")
        parsed_terms = []
        for j, term_list in enumerate(terms):
            if not isinstance(term_list, list):
                raise ModelError(f"polynomial output {j}: expected a list of terms")
            out_terms = []
            for t in term_list:
                if not isinstance(t, dict) or "coeff" not in t or "powers" not in t:
                    raise ModelError(f"polynomial output {j}: term needs coeff and powers")
                powers = t["powers"]
                if (
                    not isinstance(powers, list)
                    or len(powers) != nf
                    or not all(isinstance(p, int) and p >= 0 for p in powers)
                ):
                    raise DimensionMismatchError(
                        f"polynomial output {j}: powers must be {nf} nonnegative ints"
                    )
                out_terms.append(PolyTerm(_rational(t["coeff"], "coeff"), tuple(powers)))
            parsed_terms.append(tuple(out_terms))
        parsed_payload: object = tuple(parsed_terms)
    elif kind == "tree":
        parsed_payload = _parse_tree(payload.get("root"), nf, no, "tree root")
    elif kind == "forest":
        trees = payload.get("trees")
        if not isinstance(trees, list) or not trees:
            raise ModelError("forest: trees must be a nonempty list")
        parsed_payload = tuple(
            _parse_tree(t, nf, no, f"forest tree {i}") for i, t in enumerate(trees)
        )
    else:  # mlp
        layers = payload.get("layers")
        if not isinstance(layers, list) or not layers:
            raise ModelError("mlp: layers must be a nonempty list")
        parsed_layers = []
        prev = nf
        for i, layer in enumerate(layers):
            if not isinstance(layer, dict):
                raise ModelError(f"mlp layer {i}: expected an object")
            weights = layer.get("weights")
            bias = layer.get("bias")
            activation = layer.get("activation", "relu" if i < len(layers) - 1 else "linear")
            if activation not in ("relu", "linear"):
                raise ModelError(f"mlp layer {i}: unknown activation {activation!r}")
            if not isinstance(weights, list) or not weights:
                raise DimensionMismatchError(f"mlp layer {i}: weights must be a nonempty matrix")
            rows = []
            for row in weights:
                if not isinstance(row, list) or len(row) != prev:
                    raise DimensionMismatchError(
                        f"mlp layer {i}: weight rows must have {prev} entries"
                    )
                rows.append(tuple(_rational(w, f"mlp layer {i} weight") for w in row))
            if not isinstance(bias, list) or len(bias) != len(rows):
                raise DimensionMismatchError(f"mlp layer {i}: bias must have {len(rows)} entries")
            parsed_layers.append(
                Layer(
                    tuple(rows),
                    tuple(_rational(b, f"mlp layer {i} bias") for b in bias),
                    activation,
                )
            )
            prev = len(rows)
        if prev != no:
            raise DimensionMismatchError(f"mlp: final layer must have {no} outputs, got {prev}")
        if parsed_layers[-1].activation != "linear":
            raise ModelError("mlp: final layer must be linear")
        parsed_payload = tuple(parsed_layers)

    return ModelArtifact(kind, tuple(features), tuple(outputs), parsed_payload)


def load_model(path: str) -> ModelArtifact:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


def eval_model(m: ModelArtifact, point: Assignment) -> dict[str, Fraction]:
    """Direct payload interpretation at a feature point (exact arithmetic)."""
    vals: list[Fraction] = []
    for f in m.features:
        v = point[f]
        if isinstance(v, str):
            raise ModelError(f"feature {f!r}: categorical features are not supported")
        vals.append(v)

    if m.kind == "polynomial":
        out = []
        for terms in m.payload:  # type: ignore[union-attr]
            acc = Fraction(0)
            for t in terms:
                prod = t.coeff
                for v, p in zip(vals, t.powers):
                    if p:
                        prod *= v**p
                acc += prod
            out.append(acc)
        return dict(zip(m.outputs, out))

    def walk(node) -> tuple[Fraction, ...]:
        while isinstance(node, TreeSplit):
            node = node.left if vals[node.feature] <= node.threshold else node.right
        return node.values

    if m.kind == "tree":
        return dict(zip(m.outputs, walk(m.payload)))
    if m.kind == "forest":
        trees = m.payload
        n = Fraction(len(trees))
        sums = [Fraction(0)] * len(m.outputs)
        for t in trees:
            leaf = walk(t)
            for j, v in enumerate(leaf):
                sums[j] += v
        return dict(zip(m.outputs, (s / n for s in sums)))

    # mlp
    acts = vals
    for layer in m.payload:  # type: ignore[union-attr]
        nxt = []
        for row, b in zip(layer.weights, layer.bias):
            z = b + sum((w * a for w, a in zip(row, acts)), Fraction(0))
            nxt.append(max(Fraction(0), z) if layer.activation == "relu" else z)
        acts = nxt
    return dict(zip(m.outputs, acts))


@dataclass(frozen=True)
class EncodedModel:
    """Symbolic form of a model over its feature variables.

    output_exprs: each output as a closed expression over the features.
    formula:      conjunction of defining equalities (aux vars for ReLUs).
    aux:          ordered (name, defining expression) pairs; each definition
                  may reference features and earlier aux variables.
    """

    features: tuple[str, ...]
    outputs: tuple[str, ...]
    output_exprs: Mapping[str, Expr]
    formula: Formula
    aux: tuple[tuple[str, Expr], ...] = ()

    @staticmethod
    def from_exprs(
        output_exprs: Mapping[str, Expr], features: Sequence[str] | None = None
    ) -> "EncodedModel":
        """Wrap hand-built output expressions (used by tests and oracles)."""
        if features is None:
            names: dict[str, None] = {}
            for e in output_exprs.values():
                for n, _s in free_vars(e).items():
                    names.setdefault(n)
            features = tuple(names)
        sorts = {}
        for e in output_exprs.values():
            sorts.update(free_vars(e))
        formula = conj(
            Cmp(CmpOp.EQ, Var(y, Sort.REAL), e) for y, e in output_exprs.items()
        )
        return EncodedModel(
            features=tuple(features),
            outputs=tuple(output_exprs),
            output_exprs=dict(output_exprs),
            formula=formula,
            aux=(),
        )

    def witness(self, point: Assignment) -> dict[str, Fraction | str]:
        """Extend a feature point with aux and output values satisfying formula."""
        env: dict[str, Fraction | str] = {k: point[k] for k in self.features}
        for name, definition in self.aux:
            env[name] = evaluate(definition, env)
        for y, e in self.output_exprs.items():
            env[y] = evaluate(e, {k: point[k] for k in self.features})
        return env

    def enclosure(self, box: Box) -> dict[str, Interval]:
        """Sound intervals for aux variables and outputs over a feature box."""
        extended: Box = dict(box)
        out: dict[str, Interval] = {}
        for name, definition in self.aux:
            iv = expr_interval(definition, extended)
            extended[name] = VarDomain.real(iv.lo, iv.hi)
            out[name] = iv
        for y, e in self.output_exprs.items():
            out[y] = expr_interval(e, box)
        return out


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}_{k}"
    taken.add(name)
    return name


def encode_model(
    m: ModelArtifact, spec: ProblemSpec | None = None
) -> EncodedModel:
    """Build the symbolic encoding; validates against the spec if given."""
    sorts: dict[str, Sort] = {f: Sort.REAL for f in m.features}
    if spec is not None:
        declared_features = {v.label for v in spec.variables if v.interface in ("knob", "input")}
        declared_outputs = {v.label for v in spec.outputs}
        if set(m.features) != declared_features:
            raise FeatureMismatchError(
                f"model features {sorted(m.features)} != declared knobs+inputs "
                f"{sorted(declared_features)}"
            )
        if set(m.outputs) != declared_outputs:
            raise FeatureMismatchError(
                f"model outputs {sorted(m.outputs)} != declared outputs "
                f"{sorted(declared_outputs)}"
            )
        for v in spec.variables:
            if v.label in sorts:
                if v.sort is Sort.SET:
                    raise FeatureMismatchError(
                        f"feature {v.label!r}: categorical features are not supported"
                    )
                sorts[v.label] = v.sort

    fvars = [Var(f, sorts[f]) for f in m.features]

    def linear_comb(row, bias: Fraction, prev: list[Expr]) -> Expr:
        acc: Expr | None = Const(bias) if bias != 0 else None
        for w, e in zip(row, prev):
            if w == 0:
                continue
            term = e if w == 1 else Mul(Const(w), e)
            acc = term if acc is None else Add(acc, term)
        return acc if acc is not None else Const(Fraction(0))

    if m.kind == "polynomial":
        output_exprs: dict[str, Expr] = {}
        for y, terms in zip(m.outputs, m.payload):  # type: ignore[union-attr]
            acc: Expr | None = None
            for t in terms:
                factor: Expr | None = None
                for v, p in zip(fvars, t.powers):
                    if p == 0:
                        continue
                    piece = v if p == 1 else Pow(v, p)
                    factor = piece if factor is None else Mul(factor, piece)
                term = (
                    Const(t.coeff)
                    if factor is None
                    else (factor if t.coeff == 1 else Mul(Const(t.coeff), factor))
                )
                acc = term if acc is None else Add(acc, term)
            output_exprs[y] = acc if acc is not None else Const(Fraction(0))
        formula = conj(
            Cmp(CmpOp.EQ, Var(y, _output_sort(spec, y)), e) for y, e in output_exprs.items()
        )
        return EncodedModel(m.features, m.outputs, output_exprs, formula)

    if m.kind in ("tree", "forest"):

        def tree_expr(node, j: int) -> Expr:
            if isinstance(node, TreeLeaf):
                return Const(node.values[j])
            return Ite(
                Cmp(CmpOp.LE, fvars[node.feature], Const(node.threshold)),
                tree_expr(node.left, j),
                tree_expr(node.right, j),
            )

        output_exprs = {}
        for j, y in enumerate(m.outputs):
            if m.kind == "tree":
                output_exprs[y] = tree_expr(m.payload, j)
            else:
                trees = m.payload
                total: Expr | None = None
                for t in trees:
                    e = tree_expr(t, j)
                    total = e if total is None else Add(total, e)
                assert total is not None
                output_exprs[y] = Mul(Const(Fraction(1, len(trees))), total)
        formula = conj(
            Cmp(CmpOp.EQ, Var(y, _output_sort(spec, y)), e) for y, e in output_exprs.items()
        )
        return EncodedModel(m.features, m.outputs, output_exprs, formula)

    # mlp: inline expressions for output_exprs, aux variables for the formula.
    taken = set(m.features) | set(m.outputs)
    zero = Const(Fraction(0))

    inline_prev: list[Expr] = list(fvars)
    aux_prev: list[Expr] = list(fvars)
    aux_defs: list[tuple[str, Expr]] = []
    equalities: list[Formula] = []
    layers = list(m.payload)  # type: ignore[arg-type]
    for li, layer in enumerate(layers):
        is_last = li == len(layers) - 1
        inline_next: list[Expr] = []
        aux_next: list[Expr] = []
        for ni, (row, b) in enumerate(zip(layer.weights, layer.bias)):
            z_inline = linear_comb(row, b, inline_prev)
            z_aux = linear_comb(row, b, aux_prev)
            if layer.activation == "relu":
                relu_inline = Ite(Cmp(CmpOp.GE, z_inline, zero), z_inline, zero)
                name = _fresh(f"__relu{li}_{ni}", taken)
                aux_defs.append(
                    (name, Ite(Cmp(CmpOp.GE, z_aux, zero), z_aux, zero))
                )
                inline_next.append(relu_inline)
                aux_next.append(Var(name, Sort.REAL))
            else:
                inline_next.append(z_inline)
                aux_next.append(z_aux)
            if is_last:
                y = m.outputs[ni]
                equalities.append(Cmp(CmpOp.EQ, Var(y, _output_sort(spec, y)), aux_next[-1]))
        inline_prev = inline_next
        aux_prev = aux_next

    output_exprs = dict(zip(m.outputs, inline_prev))
    aux_equalities = [
        Cmp(CmpOp.EQ, Var(name, Sort.REAL), definition) for name, definition in aux_defs
    ]
    formula = conj(aux_equalities + equalities)
    return EncodedModel(m.features, m.outputs, output_exprs, formula, tuple(aux_defs))


def _output_sort(spec: ProblemSpec | None, label: str) -> Sort:
    if spec is None:
        return Sort.REAL
    for v in spec.outputs:
        if v.label == label:
            return v.sort
    return Sort.REAL
