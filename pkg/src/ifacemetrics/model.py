"""Core code model: type names, method signatures, and the resolved type graph.

A model is built from :class:`TypeDecl` values (one per class or interface),
resolves declared supertype references into a subtype adjacency, and keeps an
inverted index from canonical signature keys to the interfaces declaring them.
Signature identity is textual: a signature is the triple (return type, name,
parameter types) with all type texts normalized to whitespace-free simple
names.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fnmatch import fnmatchcase
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Iterator, Mapping

from .errors import DomainError, ModelError, NormalizationError

logger = logging.getLogger(__name__)

INTERFACE = "interface"
CLASS = "class"

_KINDS = frozenset({INTERFACE, CLASS})
_TEST_PACKAGE_SEGMENTS = frozenset({"test", "tests"})
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")


@dataclass(frozen=True, order=True)
class TypeName:
    """Dot-separated qualified name of a class or interface."""

    qualified: str

    def __post_init__(self) -> None:
        if not self.qualified:
            raise ValueError("type name must be non-empty")

    @property
    def simple(self) -> str:
        """Last segment of the qualified name."""
        return self.qualified.rsplit(".", 1)[-1]

    @property
    def package(self) -> str:
        """Everything before the last segment ('' for unqualified names)."""
        head, _, _ = self.qualified.rpartition(".")
        return head

    def __str__(self) -> str:
        return self.qualified


@dataclass(frozen=True, order=True)
class MethodSignature:
    """Normalized (return type, name, parameter types) triple.

    Parameter order is significant; parameter names never appear. Two
    signatures are equal exactly when all three components are equal.
    """

    name: str
    return_type: str
    param_types: tuple[str, ...]

    def __str__(self) -> str:
        return signature_key(self)


@dataclass(frozen=True)
class TypeDecl:
    """One class or interface declaration.

    ``supertypes`` keeps the declared references in source order; they may be
    simple names that only resolve once the whole model is assembled.
    """

    name: TypeName
    kind: str
    signatures: frozenset[MethodSignature] = frozenset()
    supertypes: tuple[TypeName, ...] = ()
    is_test: bool = False
    is_external: bool = False

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown type kind: {self.kind!r}")

    @property
    def is_interface(self) -> bool:
        return self.kind == INTERFACE

    @property
    def is_marker(self) -> bool:
        """True for interfaces that declare no methods (markers/constants)."""
        return self.kind == INTERFACE and not self.signatures


@dataclass(frozen=True)
class ExclusionPolicy:
    """Which declarations to drop from metric scope.

    ``exclude_globs`` are matched against file paths while scanning sources
    and against qualified type names while filtering a model.
    """

    exclude_tests: bool = True
    exclude_markers: bool = True
    exclude_externals: bool = True
    exclude_globs: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Type text normalization
# ---------------------------------------------------------------------------

def _tokenize_type_text(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = re.match(r"[A-Za-z_$][A-Za-z0-9_$]*", text[i:])
        if m:
            tokens.append(m.group())
            i += m.end()
            continue
        if text.startswith("...", i):
            tokens.append("...")
            i += 3
            continue
        if ch in ".,<>[]()?@":
            tokens.append(ch)
            i += 1
            continue
        raise NormalizationError(f"malformed type text {text!r}: unexpected {ch!r}")
    return tokens


class _TypeParser:
    """Recursive-descent parser for Java type texts.

    Produces the normalized form: package qualifiers stripped to simple names
    (also inside generic arguments), annotations dropped, all whitespace
    removed, varargs rendered as arrays. Wildcard bounds render without
    spaces (``List<?extendsNumber>``), consistent with the no-whitespace rule.
    """

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize_type_text(text)
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise NormalizationError(f"malformed type text {self.text!r}: unexpected end")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise NormalizationError(
                f"malformed type text {self.text!r}: expected {tok!r}, got {got!r}"
            )

    def fail(self, why: str) -> NormalizationError:
        return NormalizationError(f"malformed type text {self.text!r}: {why}")

    def skip_annotations(self) -> None:
        while self.peek() == "@":
            self.next()
            if not _is_ident(self.peek()):
                raise self.fail("annotation name expected after '@'")
            self.next()
            while self.peek() == ".":
                self.next()
                if not _is_ident(self.peek()):
                    raise self.fail("annotation name segment expected")
                self.next()
            if self.peek() == "(":
                depth = 0
                while True:
                    tok = self.next()
                    if tok == "(":
                        depth += 1
                    elif tok == ")":
                        depth -= 1
                        if depth == 0:
                            break

    def parse_type(self) -> str:
        """One full type expression; leaves trailing tokens unconsumed."""
        self.skip_annotations()
        tok = self.peek()
        if not _is_ident(tok):
            raise self.fail(f"type name expected, got {tok!r}")
        name = self.next()
        args = self.maybe_type_args()
        while self.peek() == ".":
            self.next()
            self.skip_annotations()
            if not _is_ident(self.peek()):
                raise self.fail("name segment expected after '.'")
            name = self.next()
            args = self.maybe_type_args()
        out = name + args
        out += self.array_suffix()
        if self.peek() == "...":
            self.next()
            out += "[]"
            out += self.array_suffix()
        return out

    def maybe_type_args(self) -> str:
        if self.peek() != "<":
            return ""
        self.next()
        if self.peek() == ">":  # diamond
            self.next()
            return "<>"
        parts = [self.parse_type_arg()]
        while self.peek() == ",":
            self.next()
            parts.append(self.parse_type_arg())
        self.expect(">")
        return "<" + ",".join(parts) + ">"

    def parse_type_arg(self) -> str:
        self.skip_annotations()
        if self.peek() == "?":
            self.next()
            bound = self.peek()
            if bound in ("extends", "super"):
                self.next()
                return "?" + bound + self.parse_type()
            return "?"
        return self.parse_type()

    def array_suffix(self) -> str:
        out = ""
        while self.peek() == "[":
            self.next()
            self.expect("]")
            out += "[]"
        return out

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)


def _is_ident(tok: str | None) -> bool:
    return tok is not None and _IDENT_RE.match(tok) is not None


def normalize_type_text(text: str) -> str:
    """Normalize a raw type text (no parameter name allowed)."""
    parser = _TypeParser(text)
    out = parser.parse_type()
    if not parser.at_end():
        raise parser.fail(f"trailing tokens {parser.tokens[parser.pos:]!r}")
    return out


def _normalize_param_text(text: str) -> str:
    """Normalize a parameter text, discarding modifiers and a trailing name."""
    parser = _TypeParser(text)
    parser.skip_annotations()
    while parser.peek() == "final":
        parser.next()
        parser.skip_annotations()
    out = parser.parse_type()
    if _is_ident(parser.peek()):
        parser.next()  # parameter name
        out += parser.array_suffix()  # C-style array on the name
    if not parser.at_end():
        raise parser.fail(f"trailing tokens {parser.tokens[parser.pos:]!r}")
    return out


def normalize_signature(
    raw_name: str, raw_return: str, raw_params: Iterable[str]
) -> MethodSignature:
    """Build a normalized signature from raw source texts.

    Package qualifiers are stripped to simple names (including inside generic
    arguments and array suffixes), whitespace is removed, parameter names,
    annotations and modifiers are discarded, and varargs ``T...`` becomes
    ``T[]``. Raises :class:`NormalizationError` naming the offending text.
    """
    if not _IDENT_RE.match(raw_name):
        raise NormalizationError(f"malformed method name {raw_name!r}")
    return MethodSignature(
        name=raw_name,
        return_type=normalize_type_text(raw_return),
        param_types=tuple(_normalize_param_text(p) for p in raw_params),
    )


def signature_key(sig: MethodSignature) -> str:
    """Canonical text key, injective over normalized signatures."""
    return f"{sig.return_type} {sig.name}({','.join(sig.param_types)})"


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodeModel:
    """Immutable resolved type graph.

    ``subtypes`` is the exact inverse of the resolved supertype references,
    and ``signature_index`` maps canonical signature keys to the interfaces
    declaring them. Instances are safe to share across threads.
    """

    types: dict[TypeName, TypeDecl]
    supertypes: dict[TypeName, tuple[TypeName, ...]]
    subtypes: dict[TypeName, tuple[TypeName, ...]]
    signature_index: dict[str, frozenset[TypeName]]
    unresolved: tuple[tuple[TypeName, str], ...] = ()

    def __contains__(self, name: TypeName) -> bool:
        return name in self.types

    def __len__(self) -> int:
        return len(self.types)

    def decl(self, name: TypeName) -> TypeDecl:
        try:
            return self.types[name]
        except KeyError:
            raise DomainError(f"unknown type: {name}") from None

    def is_interface(self, name: TypeName) -> bool:
        return name in self.types and self.types[name].kind == INTERFACE

    def interfaces(self) -> list[TypeName]:
        """All interface names, sorted."""
        return sorted(n for n, d in self.types.items() if d.kind == INTERFACE)

    def classes(self) -> list[TypeName]:
        return sorted(n for n, d in self.types.items() if d.kind == CLASS)

    def interface_decl(self, name: TypeName) -> TypeDecl:
        decl = self.decl(name)
        if decl.kind != INTERFACE:
            raise DomainError(f"not an interface: {name}")
        return decl

    def signatures_of(self, name: TypeName) -> frozenset[MethodSignature]:
        return self.decl(name).signatures

    def direct_subtypes(self, name: TypeName) -> tuple[TypeName, ...]:
        """Direct subtypes (classes and interfaces declaring ``name`` as supertype)."""
        return self.subtypes.get(name, ())

    def resolved_supertypes(self, name: TypeName) -> tuple[TypeName, ...]:
        return self.supertypes.get(name, ())

    def ancestors(self, name: TypeName) -> frozenset[TypeName]:
        """All types reachable upward through resolved supertype references."""
        seen: set[TypeName] = set()
        stack = list(self.resolved_supertypes(name))
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.resolved_supertypes(cur))
        return frozenset(seen)

    def iter_decls(self) -> Iterator[TypeDecl]:
        for name in sorted(self.types):
            yield self.types[name]


def build_model(decls: Iterable[TypeDecl]) -> CodeModel:
    """Resolve supertype references and assemble the type graph.

    References resolve by exact qualified-name match, then by unique
    simple-name match among the declarations; anything else lands in
    ``unresolved`` and creates no edge. Raises :class:`ModelError` on
    duplicate names or supertype cycles.
    """
    types: dict[TypeName, TypeDecl] = {}
    for decl in decls:
        if decl.name in types:
            raise ModelError(f"duplicate type name: {decl.name}")
        types[decl.name] = decl
    types = {name: types[name] for name in sorted(types)}

    by_simple: dict[str, list[TypeName]] = {}
    for name in types:
        by_simple.setdefault(name.simple, []).append(name)

    supertypes: dict[TypeName, tuple[TypeName, ...]] = {}
    unresolved: list[tuple[TypeName, str]] = []
    for name, decl in types.items():
        resolved: list[TypeName] = []
        for ref in decl.supertypes:
            target = _resolve_ref(ref, types, by_simple)
            if target is None:
                unresolved.append((name, ref.qualified))
            elif target not in resolved:
                resolved.append(target)
        supertypes[name] = tuple(resolved)

    subtype_lists: dict[TypeName, list[TypeName]] = {name: [] for name in types}
    for name, supers in supertypes.items():
        for sup in supers:
            subtype_lists[sup].append(name)
    subtypes = {name: tuple(sorted(subs)) for name, subs in subtype_lists.items()}

    _check_acyclic(supertypes)

    index: dict[str, set[TypeName]] = {}
    for name, decl in types.items():
        if decl.kind == INTERFACE:
            for sig in decl.signatures:
                index.setdefault(signature_key(sig), set()).add(name)

    return CodeModel(
        types=types,
        supertypes=supertypes,
        subtypes=subtypes,
        signature_index={k: frozenset(v) for k, v in sorted(index.items())},
        unresolved=tuple(sorted(unresolved, key=lambda e: (e[0], e[1]))),
    )


def _resolve_ref(
    ref: TypeName,
    types: Mapping[TypeName, TypeDecl],
    by_simple: Mapping[str, list[TypeName]],
) -> TypeName | None:
    if ref in types:
        return ref
    candidates = by_simple.get(ref.simple, ())
    if len(candidates) == 1:
        return candidates[0]
    return None


def _check_acyclic(supertypes: Mapping[TypeName, tuple[TypeName, ...]]) -> None:
    sorter = TopologicalSorter({name: supers for name, supers in supertypes.items()})
    try:
        sorter.prepare()
    except CycleError as err:
        cycle = " -> ".join(str(n) for n in err.args[1])
        raise ModelError(f"supertype cycle: {cycle}") from None


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------


def filter_model(model: CodeModel, policy: ExclusionPolicy = ExclusionPolicy()) -> CodeModel:
    """Drop out-of-scope declarations and rebuild the graph over survivors.

    Removes external types, marker/constants-only interfaces, test classes
    (a ``test``/``tests`` package segment, or a transitive supertype named
    ``TestCase``), and glob-matched names. Edges to removed types are
    dropped; removals are logged with their reason. Idempotent.
    """
    testcase_memo: dict[TypeName, bool] = {}

    def inherits_testcase(name: TypeName) -> bool:
        if name in testcase_memo:
            return testcase_memo[name]
        testcase_memo[name] = False  # acyclic, but stay safe on re-entry
        decl = model.types[name]
        hit = any(ref.simple == "TestCase" for ref in decl.supertypes) or any(
            inherits_testcase(sup) for sup in model.resolved_supertypes(name)
        )
        testcase_memo[name] = hit
        return hit

    def exclusion_reason(decl: TypeDecl) -> str | None:
        if policy.exclude_externals and decl.is_external:
            return "external type"
        if policy.exclude_markers and decl.is_marker:
            return "marker interface (declares no methods)"
        if policy.exclude_tests:
            package_segments = decl.name.package.split(".") if decl.name.package else []
            if decl.is_test:
                return "flagged as test"
            if any(seg.lower() in _TEST_PACKAGE_SEGMENTS for seg in package_segments):
                return "test package"
            if inherits_testcase(decl.name):
                return "inherits TestCase"
        for pattern in policy.exclude_globs:
            if fnmatchcase(decl.name.qualified, pattern):
                return f"matches exclude pattern {pattern!r}"
        return None

    survivors: list[TypeDecl] = []
    for decl in model.iter_decls():
        reason = exclusion_reason(decl)
        if reason is None:
            survivors.append(decl)
        else:
            logger.info("excluding %s: %s", decl.name, reason)
    return build_model(survivors)


def interface_size(model: CodeModel, name: TypeName) -> int:
    """Number of methods the interface declares."""
    return len(model.interface_decl(name).signatures)
