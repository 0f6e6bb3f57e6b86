"""Small-step operational semantics with heaps and presampling tapes.

One step of a configuration is an exact sub-distribution over successor
configurations: deterministic reductions carry weight 1, an unlabeled
`rand(N)` (or a labeled one whose tape is empty or has the wrong bound)
splits uniformly into N+1 branches of weight 1/(N+1), and a labeled
`rand(N)` reads the head of a matching non-empty tape deterministically.
`state_step` is the ghost move that appends one uniformly sampled value
to a chosen tape without touching the program.

Evaluation order follows the context grammar: in applications the
argument is evaluated before the function, in stores the value before
the location, and pairs and binary operators evaluate right operand
first as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .subdist import SubDistr
from .syntax import (
    Alloc, AllocTape, App, Binop, Bool, Expr, Fold, Fst, If, Inl, Inr, Int,
    Label, Load, Loc, Match, Pack, Pair, Rand, Rec, Snd, Store, TApp, TLam,
    Unfold, Unit, Unpack, is_value, node, subst, tsubst_expr,
)


@node
class Tape:
    bound: int
    values: tuple[int, ...]


@node
class State:
    """Immutable heap + tape store; locations and labels are small naturals."""
    heap: tuple[tuple[int, Expr], ...] = ()
    tapes: tuple[tuple[int, Tape], ...] = ()

    # heap

    def heap_get(self, loc: int) -> Optional[Expr]:
        for i, v in self.heap:
            if i == loc:
                return v
        return None

    def heap_set(self, loc: int, value: Expr) -> "State":
        items = [(i, v) for i, v in self.heap if i != loc]
        items.append((loc, value))
        items.sort(key=lambda p: p[0])
        return State(tuple(items), self.tapes)

    def heap_dom(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.heap)

    # tapes

    def tape_get(self, label: int) -> Optional[Tape]:
        for i, t in self.tapes:
            if i == label:
                return t
        return None

    def tape_set(self, label: int, tape: Tape) -> "State":
        items = [(i, t) for i, t in self.tapes if i != label]
        items.append((label, tape))
        items.sort(key=lambda p: p[0])
        return State(self.heap, tuple(items))

    def tape_dom(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.tapes)


EMPTY_STATE = State()


def fresh_location(state: State) -> int:
    """Smallest natural not naming an allocated heap cell."""
    taken = set(state.heap_dom())
    i = 0
    while i in taken:
        i += 1
    return i


def fresh_label(state: State) -> int:
    taken = set(state.tape_dom())
    i = 0
    while i in taken:
        i += 1
    return i


@node
class Config:
    expr: Expr
    state: State


# ---------------------------------------------------------------------------
# Evaluation contexts


@dataclass(frozen=True)
class Frame:
    pass


@dataclass(frozen=True)
class FAppArg(Frame):  # e K
    fn: Expr


@dataclass(frozen=True)
class FAppFn(Frame):  # K v
    arg: Expr


@dataclass(frozen=True)
class FTApp(Frame):
    ty_arg: object = None


@dataclass(frozen=True)
class FIf(Frame):
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class FFst(Frame):
    pass


@dataclass(frozen=True)
class FSnd(Frame):
    pass


@dataclass(frozen=True)
class FPairR(Frame):  # (e, K)
    left: Expr


@dataclass(frozen=True)
class FPairL(Frame):  # (K, v)
    right: Expr


@dataclass(frozen=True)
class FInl(Frame):
    ann: object = None


@dataclass(frozen=True)
class FInr(Frame):
    ann: object = None


@dataclass(frozen=True)
class FFold(Frame):
    ann: object = None


@dataclass(frozen=True)
class FPack(Frame):
    witness: object = None
    ex: object = None


@dataclass(frozen=True)
class FMatch(Frame):
    left_var: str
    left_body: Expr
    right_var: str
    right_body: Expr


@dataclass(frozen=True)
class FUnfold(Frame):
    pass


@dataclass(frozen=True)
class FUnpack(Frame):
    tvar: Optional[str]
    var: str
    body: Expr


@dataclass(frozen=True)
class FAlloc(Frame):
    pass


@dataclass(frozen=True)
class FLoad(Frame):
    pass


@dataclass(frozen=True)
class FStoreR(Frame):  # e <- K
    ref: Expr


@dataclass(frozen=True)
class FStoreL(Frame):  # K <- v
    value: Expr


@dataclass(frozen=True)
class FAllocTape(Frame):
    pass


@dataclass(frozen=True)
class FRandLabel(Frame):  # rand(e, K)
    bound: Expr


@dataclass(frozen=True)
class FRandBound(Frame):  # rand(K, v)
    label: Expr


@dataclass(frozen=True)
class FBinopR(Frame):  # e op K
    op: str
    left: Expr


@dataclass(frozen=True)
class FBinopL(Frame):  # K op v
    op: str
    right: Expr


def fill_frame(f: Frame, e: Expr) -> Expr:
    match f:
        case FAppArg(fn):
            return App(fn, e)
        case FAppFn(arg):
            return App(e, arg)
        case FTApp(ty):
            return TApp(e, ty)
        case FIf(t, o):
            return If(e, t, o)
        case FFst():
            return Fst(e)
        case FSnd():
            return Snd(e)
        case FPairR(left):
            return Pair(left, e)
        case FPairL(right):
            return Pair(e, right)
        case FInl(ann):
            return Inl(e, ann)
        case FInr(ann):
            return Inr(e, ann)
        case FFold(ann):
            return Fold(e, ann)
        case FPack(w, ex):
            return Pack(e, w, ex)
        case FMatch(lv, lb, rv, rb):
            return Match(e, lv, lb, rv, rb)
        case FUnfold():
            return Unfold(e)
        case FUnpack(tv, x, body):
            return Unpack(e, tv, x, body)
        case FAlloc():
            return Alloc(e)
        case FLoad():
            return Load(e)
        case FStoreR(ref):
            return Store(ref, e)
        case FStoreL(value):
            return Store(e, value)
        case FAllocTape():
            return AllocTape(e)
        case FRandLabel(bound):
            return Rand(bound, e)
        case FRandBound(label):
            return Rand(e, label)
        case FBinopR(op, left):
            return Binop(op, left, e)
        case FBinopL(op, right):
            return Binop(op, e, right)
    raise ValueError(f"unknown frame {f!r}")


def plug(frames: list[Frame], e: Expr) -> Expr:
    """Rebuild a term from a frame stack (outermost frame first)."""
    for f in reversed(frames):
        e = fill_frame(f, e)
    return e


@dataclass(frozen=True)
class DecompValue:
    pass


@dataclass(frozen=True)
class DecompStuck:
    frames: tuple[Frame, ...]
    subterm: Expr


@dataclass(frozen=True)
class DecompRedex:
    frames: tuple[Frame, ...]
    redex: Expr


Decomposition = Union[DecompValue, DecompStuck, DecompRedex]

_COMPARABLE = (Int, Bool, Unit, Loc, Label)


def _head_redex(e: Expr) -> bool:
    """Is a head position (all evaluated subterms are values) a redex, i.e.
    does some reduction rule apply to it syntactically?"""
    match e:
        case App(fn, _):
            return isinstance(fn, Rec)
        case TApp(fn, _):
            return isinstance(fn, TLam)
        case If(c, _, _):
            return isinstance(c, Bool)
        case Fst(p) | Snd(p):
            return isinstance(p, Pair)
        case Match(s, _, _, _, _):
            return isinstance(s, (Inl, Inr))
        case Unfold(v):
            return isinstance(v, Fold)
        case Unpack(p, _, _, _):
            return isinstance(p, Pack)
        case Alloc(_):
            return True
        case Load(r):
            return isinstance(r, Loc)
        case Store(r, _):
            return isinstance(r, Loc)
        case AllocTape(b):
            return isinstance(b, Int) and b.n >= 0
        case Rand(b, lab):
            return (isinstance(b, Int) and b.n >= 0
                    and isinstance(lab, (Unit, Label)))
        case Binop(op, a, b):
            if op == "=":
                return (type(a) is type(b) and isinstance(a, _COMPARABLE))
            if op == "mod":
                return (isinstance(a, Int) and isinstance(b, Int) and b.n != 0)
            return isinstance(a, Int) and isinstance(b, Int)
    return False


def decompose(e: Expr) -> Decomposition:
    """Unique decomposition into evaluation context and redex.

    Returns DecompValue for values, DecompRedex(frames, r) when the head
    position admits a reduction rule, and DecompStuck otherwise (e.g.
    `fst true`).  plug(frames, r) rebuilds e exactly.
    """
    frames: list[Frame] = []
    cur = e
    while True:
        if is_value(cur):
            if not frames:
                return DecompValue()
            # a value under frames cannot happen: we only descend into
            # non-value subterms
            raise AssertionError("descended into a value")
        nxt: Optional[tuple[Frame, Expr]] = None
        match cur:
            case App(fn, arg):
                if not is_value(arg):
                    nxt = (FAppArg(fn), arg)
                elif not is_value(fn):
                    nxt = (FAppFn(arg), fn)
            case TApp(fn, ty):
                if not is_value(fn):
                    nxt = (FTApp(ty), fn)
            case If(c, t, o):
                if not is_value(c):
                    nxt = (FIf(t, o), c)
            case Fst(p):
                if not is_value(p):
                    nxt = (FFst(), p)
            case Snd(p):
                if not is_value(p):
                    nxt = (FSnd(), p)
            case Pair(a, b):
                if not is_value(b):
                    nxt = (FPairR(a), b)
                elif not is_value(a):
                    nxt = (FPairL(b), a)
            case Inl(v, ann):
                if not is_value(v):
                    nxt = (FInl(ann), v)
            case Inr(v, ann):
                if not is_value(v):
                    nxt = (FInr(ann), v)
            case Fold(v, ann):
                if not is_value(v):
                    nxt = (FFold(ann), v)
            case Pack(v, w, ex):
                if not is_value(v):
                    nxt = (FPack(w, ex), v)
            case Match(s, lv, lb, rv, rb):
                if not is_value(s):
                    nxt = (FMatch(lv, lb, rv, rb), s)
            case Unfold(v):
                if not is_value(v):
                    nxt = (FUnfold(), v)
            case Unpack(p, tv, x, body):
                if not is_value(p):
                    nxt = (FUnpack(tv, x, body), p)
            case Alloc(v):
                if not is_value(v):
                    nxt = (FAlloc(), v)
            case Load(r):
                if not is_value(r):
                    nxt = (FLoad(), r)
            case Store(r, v):
                if not is_value(v):
                    nxt = (FStoreR(r), v)
                elif not is_value(r):
                    nxt = (FStoreL(v), r)
            case AllocTape(b):
                if not is_value(b):
                    nxt = (FAllocTape(), b)
            case Rand(b, lab):
                if not is_value(lab):
                    nxt = (FRandLabel(b), lab)
                elif not is_value(b):
                    nxt = (FRandBound(lab), b)
            case Binop(op, a, b):
                if not is_value(b):
                    nxt = (FBinopR(op, a), b)
                elif not is_value(a):
                    nxt = (FBinopL(op, b), a)
        if nxt is not None:
            frames.append(nxt[0])
            cur = nxt[1]
            continue
        if _head_redex(cur):
            return DecompRedex(tuple(frames), cur)
        return DecompStuck(tuple(frames), cur)


# ---------------------------------------------------------------------------
# Head reductions


def _beta(rec: Rec, arg: Expr) -> Expr:
    body = rec.body
    if rec.fname != "_" and rec.fname != rec.param:
        body = subst(body, rec.fname, rec)
    return subst(body, rec.param, arg)


def _head_step(r: Expr, state: State) -> list[tuple[Expr, State, Fraction]]:
    one = Fraction(1)
    match r:
        case App(Rec() as rec, v):
            return [(_beta(rec, v), state, one)]
        case TApp(TLam(tv, body), ty):
            if tv is not None and ty is not None:
                body = tsubst_expr(body, tv, ty)
            return [(body, state, one)]
        case If(Bool(b), t, o):
            return [(t if b else o, state, one)]
        case Fst(Pair(a, _)):
            return [(a, state, one)]
        case Snd(Pair(_, b)):
            return [(b, state, one)]
        case Match(Inl(v, _), lv, lb, _, _):
            return [(subst(lb, lv, v), state, one)]
        case Match(Inr(v, _), _, _, rv, rb):
            return [(subst(rb, rv, v), state, one)]
        case Unfold(Fold(v, _)):
            return [(v, state, one)]
        case Unpack(Pack(v, w, _), tv, x, body):
            if tv is not None and w is not None:
                body = tsubst_expr(body, tv, w)
            return [(subst(body, x, v), state, one)]
        case Alloc(v):
            loc = fresh_location(state)
            return [(Loc(loc), state.heap_set(loc, v), one)]
        case Load(Loc(i)):
            v = state.heap_get(i)
            return [] if v is None else [(v, state, one)]
        case Store(Loc(i), v):
            if state.heap_get(i) is None:
                return []
            return [(Unit(), state.heap_set(i, v), one)]
        case AllocTape(Int(n)):
            lbl = fresh_label(state)
            return [(Label(lbl), state.tape_set(lbl, Tape(n, ())), one)]
        case Rand(Int(n), Unit()):
            w = Fraction(1, n + 1)
            return [(Int(i), state, w) for i in range(n + 1)]
        case Rand(Int(n), Label(l)):
            tape = state.tape_get(l)
            if tape is None:
                return []
            if tape.bound == n and tape.values:
                head, rest = tape.values[0], tape.values[1:]
                return [(Int(head), state.tape_set(l, Tape(n, rest)), one)]
            # empty tape, or a tape presampled at a different bound: sample
            # fresh and leave the tape untouched
            w = Fraction(1, n + 1)
            return [(Int(i), state, w) for i in range(n + 1)]
        case Binop(op, a, b):
            return [(_binop(op, a, b), state, one)]
    return []


def _binop(op: str, a: Expr, b: Expr) -> Expr:
    if op == "=":
        return Bool(a == b)
    assert isinstance(a, Int) and isinstance(b, Int)
    x, y = a.n, b.n
    if op == "+":
        return Int(x + y)
    if op == "-":
        return Int(x - y)
    if op == "*":
        return Int(x * y)
    if op == "mod":
        return Int(x % y)
    if op == "<":
        return Bool(x < y)
    if op == "<=":
        return Bool(x <= y)
    raise ValueError(f"unknown operator {op!r}")


def step_weights(config: Config) -> dict[Config, Fraction]:
    """step as a plain mapping; the hot path used by the execution strata."""
    d = decompose(config.expr)
    if not isinstance(d, DecompRedex):
        return {}
    frames = list(d.frames)
    out: dict[Config, Fraction] = {}
    for e2, s2, w in _head_step(d.redex, config.state):
        c2 = Config(plug(frames, e2), s2)
        out[c2] = out.get(c2, Fraction(0)) + w
    return out


def step(config: Config) -> SubDistr[Config]:
    """One-step successor sub-distribution of a configuration.

    Values and stuck configurations have no successors (zero distribution).
    Weights are exact and sum to 1 whenever any rule applies.
    """
    return SubDistr(step_weights(config))


def is_reducible(e: Expr, state: State) -> bool:
    """True iff step has at least one outcome; values and stuck are False."""
    return bool(step_weights(Config(e, state)))


def state_step(state: State, label: int) -> SubDistr[State]:
    """Ghost tape extension: append one uniform sample to the named tape."""
    tape = state.tape_get(label)
    if tape is None:
        raise ValueError(f"state_step: no tape with label {label}")
    w = Fraction(1, tape.bound + 1)
    out: dict[State, Fraction] = {}
    for n in range(tape.bound + 1):
        s2 = state.tape_set(label, Tape(tape.bound, tape.values + (n,)))
        out[s2] = w
    return SubDistr(out)


def reachable(config: Config, depth: int) -> set[Config]:
    """All configurations reachable with positive probability in <= depth steps."""
    seen = {config}
    frontier = [config]
    for _ in range(depth):
        nxt = []
        for c in frontier:
            for c2 in step_weights(c):
                if c2 not in seen:
                    seen.add(c2)
                    nxt.append(c2)
        if not nxt:
            break
        frontier = nxt
    return seen
