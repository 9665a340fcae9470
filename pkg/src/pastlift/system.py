"""Probabilistic rewrite rules, multi-distributions and whole-system checks.

Probabilities are exact rationals throughout; floats appear only in report
rendering. A multi-distribution is an ordered multiset: duplicates of the
same term are kept apart, and equality of distributions is multiset equality.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .terms import App, Symbol, Term, Var, match, term_to_str

WeightedTerm = tuple[Fraction, Term]


class MultiDistribution:
    """Finite multiset of (probability, term) pairs summing to one.

    Distributions produced by the rewrite engine always carry an exact sum of
    one (asserted here). The parser may construct improper distributions with
    ``require_proper=False`` so that ``Ptrs.validate`` can report the defect
    as a diagnostic instead of an exception.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[WeightedTerm], *, require_proper: bool = True):
        self.entries: tuple[WeightedTerm, ...] = tuple(
            (Fraction(p), t) for p, t in entries
        )
        if require_proper:
            if not self.entries:
                raise ValueError("empty distribution")
            if any(not (0 < p <= 1) for p, _ in self.entries):
                raise ValueError("probabilities must lie in (0,1]")
            total = self.total()
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, expected 1")

    def total(self) -> Fraction:
        return sum((p for p, _ in self.entries), Fraction(0))

    def support(self) -> list[Term]:
        return [t for _, t in self.entries]

    def is_proper(self) -> bool:
        return (
            bool(self.entries)
            and all(0 < p <= 1 for p, _ in self.entries)
            and self.total() == 1
        )

    def __iter__(self) -> Iterator[WeightedTerm]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiDistribution):
            return NotImplemented
        return Counter(self.entries) == Counter(other.entries)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}:{term_to_str(t)}" for p, t in self.entries)
        return "{" + inner + "}"


def scale(p: Fraction, mu: MultiDistribution | Sequence[WeightedTerm]) -> list[WeightedTerm]:
    """p*mu as a plain weighted multiset (the weights no longer sum to one)."""
    entries = mu.entries if isinstance(mu, MultiDistribution) else mu
    return [(p * q, t) for q, t in entries]


def merge(parts: Iterable[Sequence[WeightedTerm]]) -> MultiDistribution:
    """Concatenate weighted parts into a distribution; total weight must be 1."""
    flat: list[WeightedTerm] = []
    for part in parts:
        flat.extend(part)
    return MultiDistribution(flat)


def singleton(t: Term) -> MultiDistribution:
    return MultiDistribution(((Fraction(1), t),))


class ProbRule:
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: Term, rhs: MultiDistribution):
        self.lhs = lhs
        self.rhs = rhs

    @property
    def is_trivial(self) -> bool:
        """Singleton right-hand side with probability one."""
        return len(self.rhs) == 1 and self.rhs.entries[0][0] == 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProbRule):
            return NotImplemented
        return self.lhs is other.lhs and self.rhs == other.rhs

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"{term_to_str(self.lhs)} -> {self.rhs!r}"


class Ptrs:
    """An ordered set of probabilistic rewrite rules over a finite signature.

    The signature is inferred: defined symbols are the left-hand side roots,
    everything else occurring in the rules is a constructor. Constructors
    that occur in no rule may be passed as ``extra_constructors`` (the file
    format's CONSTRUCTORS block) so basic-term enumeration can use them.
    """

    def __init__(self, rules: Iterable[ProbRule], extra_constructors: Iterable[Symbol] = ()):
        self.rules: tuple[ProbRule, ...] = tuple(rules)
        self.extra_constructors: tuple[Symbol, ...] = tuple(extra_constructors)

        occurring: dict[str, Symbol] = {}

        def visit(t: Term) -> None:
            stack = [t]
            while stack:
                u = stack.pop()
                if isinstance(u, App):
                    occurring.setdefault(u.symbol.name, u.symbol)
                    stack.extend(u.args)

        defined: dict[str, Symbol] = {}
        for rule in self.rules:
            visit(rule.lhs)
            if isinstance(rule.lhs, App):
                defined.setdefault(rule.lhs.symbol.name, rule.lhs.symbol)
            for t in rule.rhs.support():
                visit(t)
        for sym in self.extra_constructors:
            occurring.setdefault(sym.name, sym)

        self.defined_symbols: frozenset[Symbol] = frozenset(defined.values())
        self.constructor_symbols: frozenset[Symbol] = frozenset(
            sym for name, sym in occurring.items() if name not in defined
        )
        self.signature: dict[str, Symbol] = dict(sorted(occurring.items()))

        self._rules_by_root: dict[tuple[str, int], list[tuple[int, ProbRule]]] = {}
        for idx, rule in enumerate(self.rules):
            if isinstance(rule.lhs, App):
                key = (rule.lhs.symbol.name, rule.lhs.symbol.arity)
                self._rules_by_root.setdefault(key, []).append((idx, rule))
        self._nf_cache: dict[Term, bool] = {}

    @property
    def is_trivial(self) -> bool:
        """True iff every rule has a singleton {1: r} right-hand side."""
        return all(rule.is_trivial for rule in self.rules)

    def rules_for(self, name: str, arity: int) -> list[tuple[int, ProbRule]]:
        return self._rules_by_root.get((name, arity), [])

    def rules_at_root(self, t: Term) -> list[tuple[int, ProbRule]]:
        if isinstance(t, Var):
            return []
        return self._rules_by_root.get((t.symbol.name, t.symbol.arity), [])

    def root_match(self, t: Term) -> bool:
        return any(match(rule.lhs, t) is not None for _, rule in self.rules_at_root(t))

    def validate(self) -> list[str]:
        """All rule-level violations; an empty list means the system is valid."""
        violations: list[str] = []
        arities: dict[str, int] = {}

        def check_arities(t: Term, where: str) -> None:
            stack = [t]
            while stack:
                u = stack.pop()
                if isinstance(u, App):
                    prev = arities.setdefault(u.symbol.name, u.symbol.arity)
                    if prev != u.symbol.arity:
                        violations.append(
                            f"{where}: symbol {u.symbol.name} used with arity "
                            f"{u.symbol.arity} but declared with arity {prev}"
                        )
                    stack.extend(u.args)

        for sym in self.extra_constructors:
            arities.setdefault(sym.name, sym.arity)
        for idx, rule in enumerate(self.rules):
            where = f"rule {idx}"
            if isinstance(rule.lhs, Var):
                violations.append(f"{where}: left-hand side is a variable")
            check_arities(rule.lhs, where)
            if not rule.rhs.entries:
                violations.append(f"{where}: empty right-hand side distribution")
            total = rule.rhs.total()
            if total != 1:
                violations.append(f"{where}: probabilities sum to {total}")
            for p, t in rule.rhs.entries:
                if not (0 < p <= 1):
                    violations.append(f"{where}: probability {p} outside (0,1]")
                check_arities(t, where)
                loose = t.vars - rule.lhs.vars
                for name in sorted(loose):
                    violations.append(
                        f"{where}: variable {name} occurs in a right-hand side "
                        f"but not in the left-hand side"
                    )
        return violations

    def signature_split(self) -> tuple[frozenset[Symbol], frozenset[Symbol]]:
        return self.defined_symbols, self.constructor_symbols

    def is_normal_form(self, t: Term) -> bool:
        """No subterm of t matches any left-hand side. Cached per system."""
        cache = self._nf_cache
        got = cache.get(t)
        if got is not None:
            return got
        stack = [t]
        while stack:
            u = stack[-1]
            if u in cache:
                stack.pop()
                continue
            if isinstance(u, Var):
                cache[u] = True
                stack.pop()
                continue
            pending = [a for a in u.args if a not in cache]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            if not all(cache[a] for a in u.args):
                cache[u] = False
            else:
                cache[u] = not self.root_match(u)
        return cache[t]

    def is_basic(self, t: Term) -> bool:
        """Defined root symbol applied to constructor-only arguments."""
        if isinstance(t, Var) or t.symbol not in self.defined_symbols:
            return False
        defined_names = {sym.name for sym in self.defined_symbols}
        stack = list(t.args)
        while stack:
            u = stack.pop()
            if isinstance(u, App):
                if u.symbol.name in defined_names:
                    return False
                stack.extend(u.args)
        return True

    def nf_mass(self, mu: MultiDistribution) -> Fraction:
        return sum(
            (p for p, t in mu.entries if self.is_normal_form(t)), Fraction(0)
        )

    def __repr__(self) -> str:
        return f"Ptrs({len(self.rules)} rules)"
