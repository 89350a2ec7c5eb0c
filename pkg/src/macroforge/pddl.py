"""
Recursive-descent reader for the STRIPS subset of PDDL.

Accepts domains declaring ``:strips`` and optionally ``:typing``. Anything
beyond that (negative preconditions, conditional effects, numeric fluents,
derived predicates, durative actions) is rejected with an
:class:`UnsupportedFeatureError` instead of being silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})

# Keywords that signal constructs outside the STRIPS subset.
_UNSUPPORTED_FORMULAS = frozenset(
    {"not", "or", "imply", "forall", "exists", "when", "=", "either",
     "increase", "decrease", "assign", "scale-up", "scale-down"}
)
_UNSUPPORTED_SECTIONS = frozenset(
    {":functions", ":derived", ":durative-action", ":constraints",
     ":metric", ":timed-initial-literals", ":preferences"}
)


class PDDLError(Exception):
    """Base class for everything the reader raises."""


class PDDLSyntaxError(PDDLError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PDDLSemanticError(PDDLError):
    pass


class UnsupportedFeatureError(PDDLError):
    def __init__(self, feature: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unsupported feature: {feature}{where}")
        self.feature = feature


class Sym(str):
    """A lowercased token that remembers where it came from."""

    line: int
    column: int

    def __new__(cls, value: str, line: int, column: int):
        obj = super().__new__(cls, value)
        obj.line = line
        obj.column = column
        return obj


class SList(list):
    """A parenthesised list; ``line``/``column`` point at its open paren."""

    def __init__(self, line: int, column: int):
        super().__init__()
        self.line = line
        self.column = column


def read_sexpr(text: str) -> SList:
    """Parse ``text`` into exactly one top-level parenthesised expression."""
    stack: list[SList] = []
    result: SList | None = None
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            if result is not None and not stack:
                raise PDDLSyntaxError("trailing content after expression", line, col)
            stack.append(SList(line, col))
            i += 1
            col += 1
            continue
        if ch == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        if not stack:
            raise PDDLSyntaxError(
                f"token {text[start:i]!r} outside parentheses", line, start_col
            )
        stack[-1].append(Sym(text[start:i].lower(), line, start_col))
    if stack:
        opened = stack[-1]
        raise PDDLSyntaxError("unbalanced '(' never closed", opened.line, opened.column)
    if result is None:
        raise PDDLSyntaxError("empty input", line, col)
    return result


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    parameters: tuple[str, ...]
    types: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class OperatorSchema:
    """Lifted action. Atom templates are tuples ``(predicate, *terms)``."""

    name: str
    parameters: tuple[str, ...]
    parameter_types: tuple[str, ...]
    precondition: tuple[tuple[str, ...], ...]
    add: tuple[tuple[str, ...], ...]
    delete: tuple[tuple[str, ...], ...]


@dataclass
class Domain:
    name: str
    requirements: frozenset[str]
    types: dict[str, str]  # type -> parent type
    constants: dict[str, str]  # constant -> type
    predicates: dict[str, PredicateSchema]
    operators: list[OperatorSchema]

    def is_subtype(self, sub: str, sup: str) -> bool:
        seen = set()
        while sub not in seen:
            if sub == sup:
                return True
            seen.add(sub)
            if sub not in self.types:
                break
            sub = self.types[sub]
        return sup == "object"


@dataclass
class Problem:
    name: str
    domain_name: str
    objects: dict[str, str]  # object -> type, constants included
    init: frozenset[tuple[str, ...]]
    goal: frozenset[tuple[str, ...]]
    object_order: list[str] = field(default_factory=list)


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PDDLSyntaxError(f"expected a list for {what}", node.line, node.column)
    return node


def _typed_list(items) -> list[tuple[str, str]]:
    """``a b - t c`` -> [(a, t), (b, t), (c, object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        tok = items[i]
        if isinstance(tok, SList):
            if tok and tok[0] == "either":
                raise UnsupportedFeatureError("either types", tok.line)
            raise PDDLSyntaxError("unexpected list in typed list", tok.line, tok.column)
        if tok == "-":
            nxt = items[i + 1] if i + 1 < len(items) else None
            if isinstance(nxt, SList) and nxt and nxt[0] == "either":
                raise UnsupportedFeatureError("either types", nxt.line)
            if nxt is None or isinstance(nxt, SList):
                raise PDDLSyntaxError("'-' not followed by a type name", tok.line, tok.column)
            typ = str(nxt)
            if not pending:
                raise PDDLSyntaxError("type given for no names", tok.line, tok.column)
            out.extend((name, typ) for name in pending)
            pending = []
            i += 2
            continue
        pending.append(str(tok))
        i += 1
    out.extend((name, "object") for name in pending)
    return out


def _check_header(expr: SList, kind: str) -> str:
    if len(expr) < 2 or expr[0] != "define":
        raise PDDLSyntaxError("expected (define ...)", expr.line, expr.column)
    head = _expect_list(expr[1], kind)
    if len(head) != 2 or head[0] != kind or isinstance(head[1], SList):
        raise PDDLSyntaxError(f"expected ({kind} <name>)", head.line, head.column)
    return str(head[1])


def _atom_template(node) -> tuple[str, ...]:
    lst = _expect_list(node, "atom")
    if not lst:
        raise PDDLSyntaxError("empty atom", lst.line, lst.column)
    head = lst[0]
    if head in _UNSUPPORTED_FORMULAS:
        raise UnsupportedFeatureError(f"'{head}' formulas", lst.line)
    for tok in lst:
        if isinstance(tok, SList):
            raise PDDLSyntaxError("nested list inside atom", tok.line, tok.column)
    return tuple(str(t) for t in lst)


def _conjunction(node) -> list[SList]:
    """Flatten an ``(and ...)`` tree; a bare atom is a one-element conjunction."""
    lst = _expect_list(node, "formula")
    if not lst:
        return []
    if lst[0] == "and":
        parts: list[SList] = []
        for sub in lst[1:]:
            parts.extend(_conjunction(sub))
        return parts
    return [lst]


class _DomainReader:
    def __init__(self, expr: SList):
        self.expr = expr
        self.name = _check_header(expr, "domain")
        self.requirements: set[str] = set()
        self.types: dict[str, str] = {}
        self.constants: dict[str, str] = {}
        self.predicates: dict[str, PredicateSchema] = {}
        self.operators: list[OperatorSchema] = []

    def read(self) -> Domain:
        for section in self.expr[2:]:
            sec = _expect_list(section, "domain section")
            if not sec or isinstance(sec[0], SList):
                raise PDDLSyntaxError("malformed section", sec.line, sec.column)
            key = sec[0]
            if key == ":requirements":
                self._requirements(sec)
            elif key == ":types":
                for name, parent in _typed_list(sec[1:]):
                    self.types[name] = parent
            elif key == ":constants":
                for name, typ in _typed_list(sec[1:]):
                    self.constants[name] = typ
            elif key == ":predicates":
                self._predicates(sec)
            elif key == ":action":
                self.operators.append(self._action(sec))
            elif key in _UNSUPPORTED_SECTIONS:
                raise UnsupportedFeatureError(str(key), sec.line)
            else:
                raise PDDLSyntaxError(f"unknown domain section {key!r}", key.line, key.column)
        return Domain(
            name=self.name,
            requirements=frozenset(self.requirements),
            types=self.types,
            constants=self.constants,
            predicates=self.predicates,
            operators=self.operators,
        )

    def _requirements(self, sec: SList) -> None:
        for tok in sec[1:]:
            if isinstance(tok, SList):
                raise PDDLSyntaxError("bad requirement", tok.line, tok.column)
            if tok not in SUPPORTED_REQUIREMENTS:
                raise UnsupportedFeatureError(f"requirement {tok}", tok.line)
            self.requirements.add(str(tok))

    def _predicates(self, sec: SList) -> None:
        for decl in sec[1:]:
            decl = _expect_list(decl, "predicate declaration")
            if not decl or isinstance(decl[0], SList):
                raise PDDLSyntaxError("malformed predicate", decl.line, decl.column)
            name = str(decl[0])
            if name in self.predicates:
                raise PDDLSemanticError(f"predicate {name!r} declared twice")
            params = _typed_list(decl[1:])
            self.predicates[name] = PredicateSchema(
                name, tuple(p for p, _ in params), tuple(t for _, t in params)
            )

    def _action(self, sec: SList) -> OperatorSchema:
        if len(sec) < 2 or isinstance(sec[1], SList):
            raise PDDLSyntaxError("action without a name", sec.line, sec.column)
        name = str(sec[1])
        fields: dict[str, object] = {}
        i = 2
        while i < len(sec):
            key = sec[i]
            if isinstance(key, SList) or not key.startswith(":"):
                raise PDDLSyntaxError("expected an action keyword", key.line, key.column)
            if i + 1 >= len(sec):
                raise PDDLSyntaxError(f"{key} without a value", key.line, key.column)
            if key not in (":parameters", ":precondition", ":effect"):
                raise UnsupportedFeatureError(f"action field {key}", key.line)
            fields[str(key)] = sec[i + 1]
            i += 2
        params = _typed_list(_expect_list(fields.get(":parameters", SList(sec.line, sec.column)),
                                          "parameters"))
        variables = {p for p, _ in params}
        if len(variables) != len(params):
            raise PDDLSemanticError(f"action {name!r} repeats a parameter")

        pre = [self._checked(_atom_template(a), variables, name)
               for a in _conjunction(fields[":precondition"])] if ":precondition" in fields else []
        add: list[tuple[str, ...]] = []
        dele: list[tuple[str, ...]] = []
        if ":effect" in fields:
            for lit in _conjunction(fields[":effect"]):
                if lit and lit[0] == "not":
                    if len(lit) != 2:
                        raise PDDLSyntaxError("(not ...) takes one atom", lit.line, lit.column)
                    dele.append(self._checked(_atom_template(lit[1]), variables, name))
                else:
                    add.append(self._checked(_atom_template(lit), variables, name))
        return OperatorSchema(
            name=name,
            parameters=tuple(p for p, _ in params),
            parameter_types=tuple(t for _, t in params),
            precondition=tuple(dict.fromkeys(pre)),
            add=tuple(dict.fromkeys(add)),
            delete=tuple(dict.fromkeys(dele)),
        )

    def _checked(self, atom: tuple[str, ...], variables: set[str], action: str):
        pred = self.predicates.get(atom[0])
        if pred is None:
            raise PDDLSemanticError(f"action {action!r}: unknown predicate in {_fmt(atom)}")
        if pred.arity != len(atom) - 1:
            raise PDDLSemanticError(
                f"action {action!r}: {_fmt(atom)} has {len(atom) - 1} arguments, "
                f"{pred.name} takes {pred.arity}"
            )
        for term in atom[1:]:
            if term.startswith("?"):
                if term not in variables:
                    raise PDDLSemanticError(f"action {action!r}: free variable {term} in {_fmt(atom)}")
            elif term not in self.constants:
                raise PDDLSemanticError(f"action {action!r}: unknown constant {term!r}")
        return atom


def _fmt(atom: tuple[str, ...]) -> str:
    return "(" + " ".join(atom) + ")"


def parse_domain(text: str) -> Domain:
    return _DomainReader(read_sexpr(text)).read()


def parse_problem(text: str, domain: Domain) -> Problem:
    """Read a problem file and check every atom against ``domain``."""
    expr = read_sexpr(text)
    name = _check_header(expr, "problem")
    domain_name = ""
    objects: dict[str, str] = dict(domain.constants)
    order: list[str] = list(domain.constants)
    init_nodes: list[SList] = []
    goal_nodes: list[SList] = []
    for section in expr[2:]:
        sec = _expect_list(section, "problem section")
        if not sec or isinstance(sec[0], SList):
            raise PDDLSyntaxError("malformed section", sec.line, sec.column)
        key = sec[0]
        if key == ":domain":
            domain_name = str(sec[1]) if len(sec) == 2 else ""
        elif key == ":requirements":
            for tok in sec[1:]:
                if tok not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeatureError(f"requirement {tok}", sec.line)
        elif key == ":objects":
            for obj, typ in _typed_list(sec[1:]):
                if obj not in objects:
                    order.append(obj)
                objects[obj] = typ
        elif key == ":init":
            init_nodes = [_expect_list(a, "init atom") for a in sec[1:]]
        elif key == ":goal":
            if len(sec) > 2:
                raise PDDLSyntaxError(":goal takes a single formula", sec.line, sec.column)
            goal_nodes = _conjunction(sec[1]) if len(sec) == 2 else []
        elif key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeatureError(str(key), sec.line)
        else:
            raise PDDLSyntaxError(f"unknown problem section {key!r}", key.line, key.column)
    if domain_name and domain_name != domain.name:
        raise PDDLSemanticError(f"problem is for domain {domain_name!r}, not {domain.name!r}")
    for obj, typ in objects.items():
        if typ != "object" and typ not in domain.types and typ not in domain.types.values():
            raise PDDLSemanticError(f"object {obj!r} has undeclared type {typ!r}")

    def ground_atom(node: SList) -> tuple[str, ...]:
        atom = _atom_template(node)
        pred = domain.predicates.get(atom[0])
        if pred is None:
            raise PDDLSemanticError(f"unknown predicate in {_fmt(atom)}")
        if pred.arity != len(atom) - 1:
            raise PDDLSemanticError(
                f"{_fmt(atom)} has {len(atom) - 1} arguments, {pred.name} takes {pred.arity}"
            )
        for term, typ in zip(atom[1:], pred.types):
            if term not in objects:
                raise PDDLSemanticError(f"undeclared object {term!r} in {_fmt(atom)}")
            if not domain.is_subtype(objects[term], typ):
                raise PDDLSemanticError(f"{term!r} is not a {typ} in {_fmt(atom)}")
        return atom

    return Problem(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=frozenset(ground_atom(a) for a in init_nodes),
        goal=frozenset(ground_atom(a) for a in goal_nodes),
        object_order=order,
    )
