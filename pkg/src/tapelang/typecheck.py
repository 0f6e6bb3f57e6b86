"""Annotation-driven typechecker.

Synthesis-directed: the annotations the surface syntax requires (lambda
parameters, rec result types, injection complements, fold targets, pack
witnesses, type-application arguments) make every rule syntax-directed,
so no inference or unification happens anywhere.  `nat` is the
non-negative fragment of the single integer carrier; `fits` lets a nat
flow wherever an int is demanded (covariantly through products, sums,
and arrow codomains), and everything else is invariant.
"""

from __future__ import annotations

from typing import Optional

from .syntax import (
    Alloc, AllocTape, App, Binop, Bool, Expr, Fold, Fst, Hole, If, Inl, Inr,
    Int, Label, Load, Loc, Match, Pack, Pair, Rand, Rec, Snd, Store, TApp,
    TArrow, TBool, TExists, TForall, TInt, TLam, TMu, TNat, TProd, TRef,
    TSum, TTape, TUnit, TVar, Type, Unfold, Unit, Unpack, Var,
    free_tvars, render, render_type, tsubst_type, types_equal,
)


class TypecheckError(Exception):
    pass


def fits(a: Type, b: Type) -> bool:
    """True when a value of type a is acceptable where b is demanded."""
    if types_equal(a, b):
        return True
    if isinstance(a, TNat) and isinstance(b, TInt):
        return True
    if isinstance(a, TProd) and isinstance(b, TProd):
        return fits(a.left, b.left) and fits(a.right, b.right)
    if isinstance(a, TSum) and isinstance(b, TSum):
        return fits(a.left, b.left) and fits(a.right, b.right)
    if isinstance(a, TArrow) and isinstance(b, TArrow):
        return fits(b.dom, a.dom) and fits(a.cod, b.cod)
    return False


def _join(a: Type, b: Type, where: str) -> Type:
    """Least type both branches fit: the lub under `fits`.

    nat/int join pointwise through products, sums, and arrow codomains;
    arrow domains take the meet (the glb), matching contravariance.
    """
    out = _bound(a, b, up=True)
    if out is None:
        raise TypecheckError(f"{where}: branch type mismatch: "
                             f"{render_type(a)} vs {render_type(b)}")
    return out


def _bound(a: Type, b: Type, up: bool) -> Optional[Type]:
    if types_equal(a, b):
        return a
    if {type(a), type(b)} == {TNat, TInt}:
        return TInt() if up else TNat()
    if isinstance(a, TProd) and isinstance(b, TProd):
        l = _bound(a.left, b.left, up)
        r = _bound(a.right, b.right, up)
        return TProd(l, r) if l is not None and r is not None else None
    if isinstance(a, TSum) and isinstance(b, TSum):
        l = _bound(a.left, b.left, up)
        r = _bound(a.right, b.right, up)
        return TSum(l, r) if l is not None and r is not None else None
    if isinstance(a, TArrow) and isinstance(b, TArrow):
        d = _bound(a.dom, b.dom, not up)
        c = _bound(a.cod, b.cod, up)
        return TArrow(d, c) if d is not None and c is not None else None
    return None


def _comparable(t: Type) -> bool:
    return isinstance(t, (TNat, TInt, TBool, TUnit, TTape, TRef))


def typecheck(e: Expr,
              env: Optional[dict[str, Type]] = None,
              tvars: frozenset[str] = frozenset(),
              heap_types: Optional[dict[int, Type]] = None) -> Type:
    """Synthesize the type of e, or raise TypecheckError.

    env is the term context, tvars the type-variable context.  heap_types
    assigns types to location literals and is only supplied when
    re-checking runtime configurations; source programs contain none.
    """
    return _synth(e, dict(env) if env else {}, tvars, heap_types)


def _wf(t: Type, tvars: frozenset[str], where: str) -> None:
    loose = free_tvars(t) - tvars
    if loose:
        name = sorted(loose)[0]
        raise TypecheckError(f"{where}: unknown type variable {name!r}")


def _synth(e: Expr, env: dict[str, Type], tvars: frozenset[str],
           heap: Optional[dict[int, Type]]) -> Type:
    match e:
        case Int(n):
            return TNat() if n >= 0 else TInt()
        case Bool(_):
            return TBool()
        case Unit():
            return TUnit()
        case Label(_):
            return TTape()
        case Loc(i):
            if heap is None or i not in heap:
                raise TypecheckError(
                    f"location literal loc({i}) outside runtime checking")
            return TRef(heap[i])
        case Var(x):
            if x not in env:
                raise TypecheckError(f"unbound variable {x!r}")
            return env[x]
        case Hole():
            raise TypecheckError("context hole must be plugged before typechecking")

        case App(Rec("_", x, body, None, None), arg):
            # let-binding: the bound expression's type annotates the binder
            bound_ty = _synth(arg, env, tvars, heap)
            env2 = dict(env)
            env2[x] = bound_ty
            return _synth(body, env2, tvars, heap)
        case App(fn, arg):
            fn_ty = _synth(fn, env, tvars, heap)
            if not isinstance(fn_ty, TArrow):
                raise TypecheckError(
                    f"applied a non-function of type {render_type(fn_ty)}: {render(fn)}")
            arg_ty = _synth(arg, env, tvars, heap)
            if not fits(arg_ty, fn_ty.dom):
                raise TypecheckError(
                    f"argument type {render_type(arg_ty)} does not fit "
                    f"parameter type {render_type(fn_ty.dom)} in {render(e)}")
            return fn_ty.cod

        case Rec(f, x, body, pty, rty):
            if pty is None:
                raise TypecheckError(
                    f"missing parameter annotation on {render(e)}")
            _wf(pty, tvars, "fun parameter")
            env2 = dict(env)
            env2[x] = pty
            if rty is None:
                if f != "_":
                    raise TypecheckError(
                        f"recursive function {f!r} needs a result annotation")
                return TArrow(pty, _synth(body, env2, tvars, heap))
            _wf(rty, tvars, "rec result")
            if f != "_":
                env2[f] = TArrow(pty, rty)
            body_ty = _synth(body, env2, tvars, heap)
            if not fits(body_ty, rty):
                raise TypecheckError(
                    f"rec body has type {render_type(body_ty)}, "
                    f"annotation says {render_type(rty)}")
            return TArrow(pty, rty)

        case TLam(tv, body):
            if tv is None:
                raise TypecheckError("missing type-variable annotation on tfun")
            if tv in tvars:
                raise TypecheckError(f"shadowed type variable {tv!r}")
            return TForall(tv, _synth(body, env, tvars | {tv}, heap))
        case TApp(fn, ty_arg):
            fn_ty = _synth(fn, env, tvars, heap)
            if not isinstance(fn_ty, TForall):
                raise TypecheckError(
                    f"type application of non-polymorphic {render_type(fn_ty)}")
            if ty_arg is None:
                raise TypecheckError("missing type-application annotation")
            _wf(ty_arg, tvars, "type application")
            return tsubst_type(fn_ty.body, fn_ty.var, ty_arg)

        case Pair(a, b):
            return TProd(_synth(a, env, tvars, heap), _synth(b, env, tvars, heap))
        case Fst(p):
            p_ty = _synth(p, env, tvars, heap)
            if not isinstance(p_ty, TProd):
                raise TypecheckError(f"fst of non-pair type {render_type(p_ty)}")
            return p_ty.left
        case Snd(p):
            p_ty = _synth(p, env, tvars, heap)
            if not isinstance(p_ty, TProd):
                raise TypecheckError(f"snd of non-pair type {render_type(p_ty)}")
            return p_ty.right

        case Inl(v, other):
            if other is None:
                raise TypecheckError("missing inl annotation")
            _wf(other, tvars, "inl")
            return TSum(_synth(v, env, tvars, heap), other)
        case Inr(v, other):
            if other is None:
                raise TypecheckError("missing inr annotation")
            _wf(other, tvars, "inr")
            return TSum(other, _synth(v, env, tvars, heap))
        case Match(s, lv, lb, rv, rb):
            s_ty = _synth(s, env, tvars, heap)
            if not isinstance(s_ty, TSum):
                raise TypecheckError(
                    f"match scrutinee has non-sum type {render_type(s_ty)}")
            env_l = dict(env)
            env_l[lv] = s_ty.left
            env_r = dict(env)
            env_r[rv] = s_ty.right
            return _join(_synth(lb, env_l, tvars, heap),
                         _synth(rb, env_r, tvars, heap), "match")

        case If(c, t, o):
            c_ty = _synth(c, env, tvars, heap)
            if not fits(c_ty, TBool()):
                raise TypecheckError(
                    f"if condition has type {render_type(c_ty)}, wanted bool")
            return _join(_synth(t, env, tvars, heap),
                         _synth(o, env, tvars, heap), "if")

        case Fold(v, mu):
            if mu is None:
                raise TypecheckError("missing fold annotation")
            _wf(mu, tvars, "fold")
            if not isinstance(mu, TMu):
                raise TypecheckError(
                    f"fold annotation {render_type(mu)} is not a mu type")
            want = tsubst_type(mu.body, mu.var, mu)
            got = _synth(v, env, tvars, heap)
            if not fits(got, want):
                raise TypecheckError(
                    f"fold body has type {render_type(got)}, "
                    f"unrolling wants {render_type(want)}")
            return mu
        case Unfold(v):
            v_ty = _synth(v, env, tvars, heap)
            if not isinstance(v_ty, TMu):
                raise TypecheckError(
                    f"unfold of non-mu type {render_type(v_ty)}")
            return tsubst_type(v_ty.body, v_ty.var, v_ty)

        case Pack(v, witness, ex):
            if witness is None or ex is None:
                raise TypecheckError("missing pack annotation")
            _wf(witness, tvars, "pack witness")
            _wf(ex, tvars, "pack")
            if not isinstance(ex, TExists):
                raise TypecheckError(
                    f"pack annotation {render_type(ex)} is not existential")
            want = tsubst_type(ex.body, ex.var, witness)
            got = _synth(v, env, tvars, heap)
            if not fits(got, want):
                raise TypecheckError(
                    f"packed value has type {render_type(got)}, "
                    f"wanted {render_type(want)}")
            return ex
        case Unpack(p, tv, x, body):
            p_ty = _synth(p, env, tvars, heap)
            if not isinstance(p_ty, TExists):
                raise TypecheckError(
                    f"unpack of non-existential type {render_type(p_ty)}")
            if tv is None:
                raise TypecheckError("missing type-variable annotation on unpack")
            if tv in tvars:
                raise TypecheckError(f"shadowed type variable {tv!r}")
            env2 = dict(env)
            env2[x] = tsubst_type(p_ty.body, p_ty.var, TVar(tv))
            out = _synth(body, env2, tvars | {tv}, heap)
            if tv in free_tvars(out):
                raise TypecheckError(
                    f"existential type variable {tv!r} escapes its unpack")
            return out

        case Alloc(v):
            return TRef(_synth(v, env, tvars, heap))
        case Load(r):
            r_ty = _synth(r, env, tvars, heap)
            if not isinstance(r_ty, TRef):
                raise TypecheckError(
                    f"load from non-reference type {render_type(r_ty)}")
            return r_ty.content
        case Store(r, v):
            r_ty = _synth(r, env, tvars, heap)
            if not isinstance(r_ty, TRef):
                raise TypecheckError(
                    f"store into non-reference type {render_type(r_ty)}")
            v_ty = _synth(v, env, tvars, heap)
            if not fits(v_ty, r_ty.content):
                raise TypecheckError(
                    f"stored value has type {render_type(v_ty)}, "
                    f"cell holds {render_type(r_ty.content)}")
            return TUnit()

        case AllocTape(b):
            b_ty = _synth(b, env, tvars, heap)
            if not fits(b_ty, TNat()):
                raise TypecheckError(
                    f"alloctape bound has type {render_type(b_ty)}, wanted nat")
            return TTape()
        case Rand(b, lab):
            b_ty = _synth(b, env, tvars, heap)
            if not fits(b_ty, TNat()):
                raise TypecheckError(
                    f"rand bound has type {render_type(b_ty)}, wanted nat")
            l_ty = _synth(lab, env, tvars, heap)
            if not (fits(l_ty, TUnit()) or fits(l_ty, TTape())):
                raise TypecheckError(
                    f"rand label has type {render_type(l_ty)}, wanted unit or tape")
            return TNat()

        case Binop(op, a, b):
            a_ty = _synth(a, env, tvars, heap)
            b_ty = _synth(b, env, tvars, heap)
            if op == "=":
                joined = _join(a_ty, b_ty, "equality")
                if not _comparable(joined):
                    raise TypecheckError(
                        f"equality at non-comparable type {render_type(joined)}")
                return TBool()
            if op in ("<", "<="):
                for t in (a_ty, b_ty):
                    if not fits(t, TInt()):
                        raise TypecheckError(
                            f"comparison operand has type {render_type(t)}, wanted int")
                return TBool()
            # arithmetic
            for t in (a_ty, b_ty):
                if not fits(t, TInt()):
                    raise TypecheckError(
                        f"arithmetic operand has type {render_type(t)}, wanted int")
            if op == "-":
                return TInt()
            both_nat = fits(a_ty, TNat()) and fits(b_ty, TNat())
            return TNat() if both_nat else TInt()

    raise TypecheckError(f"cannot type {render(e)}")
