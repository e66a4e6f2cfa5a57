"""Linear algebra of linear parts: spectra, collinear conjugate maps, Jacobi matrices.

Matrices are numpy arrays. A matrix whose entries are all ``int`` or
``fractions.Fraction`` (object dtype) is handled by the exact-rational path:
zero tests are ``== 0`` and every elimination runs over the rationals, so the
rank trichotomy of :func:`collinear_classify` has no boundary ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import NotCollinear, NotConjugate, NotInFamily, ZeroMap

DEFAULT_TOL = 1e-9

SquareMatrix = np.ndarray


# ---------------------------------------------------------------------------
# helpers shared by the float and rational paths


def is_exact(M) -> bool:
    arr = np.asarray(M, dtype=object)
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in arr.flat)


def as_square(M, exact: Optional[bool] = None) -> SquareMatrix:
    """Validate ``M`` as an n x n matrix (n >= 2) with finite entries."""
    if exact is None:
        exact = is_exact(M)
    if exact:
        arr = np.array([[Fraction(v) for v in row] for row in np.asarray(M, dtype=object)], dtype=object)
    else:
        arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError("dimension must be at least 2")
    if not exact and not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def inf_norm(M) -> float:
    arr = np.asarray(M)
    return float(max(sum(abs(float(v)) for v in row) for row in arr))


def to_fractions(M) -> SquareMatrix:
    return as_square(M, exact=True)


def _rref_exact(M):
    """Row-reduce a rational matrix; returns (rref, pivot columns)."""
    R = [[Fraction(v) for v in row] for row in np.asarray(M, dtype=object)]
    rows, cols = len(R), len(R[0])
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def rank(M, tol: float = DEFAULT_TOL) -> int:
    """Rank; singular values below ``tol * ||M||_inf`` count as zero (exact path: elimination)."""
    if is_exact(M):
        return len(_rref_exact(M)[1])
    arr = np.asarray(M, dtype=float)
    scale = inf_norm(arr)
    if scale == 0.0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    return int(np.sum(s > tol * scale))


def nullspace(M, tol: float = DEFAULT_TOL) -> list:
    """Basis of the kernel as a list of vectors."""
    if is_exact(M):
        R, pivots = _rref_exact(M)
        n = len(R[0])
        free = [c for c in range(n) if c not in pivots]
        basis = []
        for f in free:
            v = [Fraction(0)] * n
            v[f] = Fraction(1)
            for row, pc in enumerate(pivots):
                v[pc] = -R[row][f]
            basis.append(np.array(v, dtype=object))
        return basis
    arr = np.asarray(M, dtype=float)
    u, s, vt = np.linalg.svd(arr)
    scale = max(inf_norm(arr), 1e-300)
    r = int(np.sum(s > tol * scale))
    return [vt[i].copy() for i in range(r, arr.shape[1])]


def inverse(M) -> SquareMatrix:
    if is_exact(M):
        n = len(M)
        aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(np.asarray(M, dtype=object))]
        R, pivots = _rref_exact(aug)
        if pivots[:n] != list(range(n)):
            raise np.linalg.LinAlgError("singular matrix")
        return np.array([row[n:] for row in R], dtype=object)
    return np.linalg.inv(np.asarray(M, dtype=float))


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _is_zero(v, scale: float, tol: float, exact: bool) -> bool:
    if exact:
        return all(x == 0 for x in np.asarray(v).flat)
    return float(np.max(np.abs(np.asarray(v, dtype=float)))) <= tol * max(scale, 1e-300)


def _probe_vectors(n: int, exact: bool):
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0

    def e(i):
        v = np.array([zero] * n, dtype=object if exact else float)
        v[i] = one
        return v

    for i in range(n):
        yield e(i)
    for i in range(n):
        for j in range(i + 1, n):
            yield e(i) + e(j)


# ---------------------------------------------------------------------------
# spectrum


def spectrum(A) -> list[complex]:
    """Eigenvalues with multiplicity, sorted by (real, imag).

    For n = 2 the characteristic polynomial is solved in closed form.
    """
    arr = np.asarray(as_square(A), dtype=float)
    n = arr.shape[0]
    if n > 4:
        raise ValueError("spectrum is provided for n <= 4")
    if n == 2:
        tr = arr[0, 0] + arr[1, 1]
        det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
        disc = tr * tr - 4.0 * det
        if disc >= 0:
            root = math.sqrt(disc)
            eig = [complex((tr - root) / 2.0, 0.0), complex((tr + root) / 2.0, 0.0)]
        else:
            root = math.sqrt(-disc)
            eig = [complex(tr / 2.0, -root / 2.0), complex(tr / 2.0, root / 2.0)]
    else:
        eig = [complex(v) for v in np.linalg.eigvals(arr)]
    return sorted(eig, key=lambda z: (z.real, z.imag))


# ---------------------------------------------------------------------------
# collinear conjugate maps


def find_nonkernel_vector(A, B, tol: float = DEFAULT_TOL):
    """A vector x with A(x) != 0 and B(x) != 0.

    Searches e_i, then e_i + e_j; one of them always works for nonzero A, B.
    """
    exact = is_exact(A) and is_exact(B)
    A = as_square(A, exact)
    B = as_square(B, exact)
    sa, sb = inf_norm(A), inf_norm(B)
    if _is_zero(A, 1.0, 0.0, exact) or sa == 0.0:
        raise ZeroMap("A is the zero map")
    if _is_zero(B, 1.0, 0.0, exact) or sb == 0.0:
        raise ZeroMap("B is the zero map")
    for x in _probe_vectors(A.shape[0], exact):
        if not _is_zero(A @ x, sa, tol, exact) and not _is_zero(B @ x, sb, tol, exact):
            return x
    raise ZeroMap("no probe vector avoids both kernels")  # unreachable for nonzero A, B


@dataclass
class CollinearityReport:
    """Outcome of :func:`collinear_classify`.

    ``case`` is ``"A1"`` (rank >= 2, B = tau*A), ``"A2"`` (rank 1, spectrum {lam, 0})
    or ``"A3"`` (rank 1, nilpotent). In A2/A3, ``basis`` has the new basis vectors
    as columns, ``a_normal``/``b_normal`` are A and B in that basis, ``g_matrix``
    is G1 or G2 (also in that basis) and ``commuter`` = G_i H in the original
    coordinates commutes with A. In A1, ``commuter`` is H and tau*A*H = H*A.
    """

    case: str
    A: SquareMatrix
    B: SquareMatrix
    H: SquareMatrix
    commuter: SquareMatrix
    tau: Optional[object] = None
    basis: Optional[SquareMatrix] = None
    a_normal: Optional[SquareMatrix] = None
    b_normal: Optional[SquareMatrix] = None
    g_matrix: Optional[SquareMatrix] = None
    exact: bool = False

    def commutation_defect(self) -> SquareMatrix:
        if self.case == "A1":
            return self.tau * (self.A @ self.H) - self.H @ self.A
        K = self.commuter
        return self.A @ K - K @ self.A

    def commutation_residual(self) -> float:
        return inf_norm(self.commutation_defect())

    def g_identity_defects(self) -> tuple:
        """(G B' - B', A' G - B') in the normal-form basis; both vanish in A2/A3."""
        if self.case == "A1":
            raise ValueError("G matrices exist only for rank-1 cases")
        G, An, Bn = self.g_matrix, self.a_normal, self.b_normal
        return G @ Bn - Bn, An @ G - Bn


def _collinear_on_probes(A, B, tol, exact) -> bool:
    n = A.shape[0]
    for x in _probe_vectors(n, exact):
        ax, bx = A @ x, B @ x
        if exact:
            if any(ax[i] * bx[j] - ax[j] * bx[i] != 0 for i in range(n) for j in range(i + 1, n)):
                return False
            continue
        ax = np.asarray(ax, dtype=float)
        bx = np.asarray(bx, dtype=float)
        na, nb = np.linalg.norm(ax), np.linalg.norm(bx)
        # all 2x2 minors of [Ax | Bx]
        wedge = np.abs(np.outer(ax, bx) - np.outer(bx, ax))
        if wedge.max() > tol * na * (1.0 + nb):
            return False
    return True


def _complete_basis(e1, e2, A, exact: bool, tol: float):
    """Extend (e1, e2) by standard vectors, corrected to lie in ker A when e2 is not.

    ``A f = alpha * e1`` for every f since rank A = 1 with image <e1>; the
    corrected vector is f - alpha * (e2 / coefficient of e1 in A e2).
    """
    n = len(e1)
    cols = [e1] + ([e2] if e2 is not None else [])
    ae2 = A @ e2 if e2 is not None else None
    e1e1 = _dot(e1, e1)
    for i in range(n):
        f = np.zeros(n, dtype=object) if exact else np.zeros(n)
        if exact:
            f[:] = [Fraction(0)] * n
        f[i] = Fraction(1) if exact else 1.0
        trial = np.column_stack(cols + [f])
        if rank(trial, tol) < len(cols) + 1:
            continue
        if e2 is not None:
            alpha = _dot(A @ f, e1) / e1e1
            c2 = _dot(ae2, e1) / e1e1
            f = f - (alpha / c2) * e2
        cols.append(f)
        if len(cols) == n:
            break
    return np.column_stack(cols)


def _rank_one_basis(A: np.ndarray, nilpotent: bool) -> np.ndarray:
    """Well-conditioned float basis for a rank-one A = s u v^T.

    A2: (u, orthonormal basis of ker A). A3: (A e2, e2, orthonormal basis of
    ker A orthogonal to u) with e2 = v / sqrt(s), so A e2 = e1.
    """
    U, sv, Vt = np.linalg.svd(A)
    u, v, s = U[:, 0], Vt[0], sv[0]
    kernel = Vt[1:].T
    if not nilpotent:
        return np.column_stack([u, kernel])
    e2 = v / math.sqrt(s)
    rest = np.linalg.svd(np.vstack([u, v]))[2][2:].T
    return np.column_stack([A @ e2, e2, rest])


def collinear_classify(A, B, H, tol: float = DEFAULT_TOL) -> CollinearityReport:
    """Classify a pair of conjugate, pointwise collinear linear maps (cases A1-A3).

    Preconditions are checked: B = H A H^-1 (else NotConjugate) and A(x), B(x)
    collinear on the probe set of basis vectors and pairwise sums (else
    NotCollinear). A = 0 raises ZeroMap.
    """
    exact = is_exact(A) and is_exact(B) and is_exact(H)
    A = as_square(A, exact)
    B = as_square(B, exact)
    H = as_square(H, exact)
    n = A.shape[0]
    if _is_zero(A, 1.0, 0.0, exact) or inf_norm(A) == 0.0:
        raise ZeroMap("A is the zero map")

    Hinv = inverse(H)
    conj = H @ A @ Hinv
    if exact:
        if np.any(conj != B):
            raise NotConjugate("B != H A H^-1")
    else:
        cond = inf_norm(H) * inf_norm(Hinv)
        if inf_norm(conj - B) > tol * max(1.0, inf_norm(B)) * max(1.0, cond):
            raise NotConjugate(f"||B - H A H^-1|| = {inf_norm(conj - B):.3e}")
    if not _collinear_on_probes(A, B, tol, exact):
        raise NotCollinear("A(x) and B(x) are not collinear on the probe set")

    r = rank(A, tol)
    if r >= 2:
        x = find_nonkernel_vector(A, B, tol)
        ax, bx = A @ x, B @ x
        tau = _dot(bx, ax) / _dot(ax, ax)
        if not exact:
            tau = float(tau)
        return CollinearityReport("A1", A, B, H, commuter=H, tau=tau, exact=exact)

    lam = sum(A[i, i] for i in range(n))
    nilpotent = lam == 0 if exact else abs(float(lam)) <= tol * inf_norm(A) * n
    if not exact:
        S = _rank_one_basis(np.asarray(A, dtype=float), nilpotent)
        case = "A3" if nilpotent else "A2"
    elif not nilpotent:
        # A2: e1 spans the image (eigenvector for lam), the rest spans ker A
        x = max(_probe_vectors(n, exact), key=lambda v: float(np.linalg.norm(np.asarray(A @ v, dtype=float))))
        e1 = A @ x
        lead = next(v for v in e1 if (v != 0 if exact else abs(v) > tol * inf_norm(A)))
        e1 = e1 / lead
        S = _complete_basis(e1, None, A, exact, tol)
        # correct the completing vectors into ker A: A f = alpha e1, A e1 = lam e1
        e1e1 = _dot(e1, e1)
        for k in range(1, n):
            f = S[:, k]
            alpha = _dot(A @ f, e1) / e1e1
            S[:, k] = f - (alpha / lam) * e1
        case = "A2"
    else:
        e2 = find_nonkernel_vector(A, B, tol)
        e1 = A @ e2
        S = _complete_basis(e1, e2, A, exact, tol)
        case = "A3"

    Sinv = inverse(S)
    An = Sinv @ A @ S
    Bn = Sinv @ B @ S
    if case == "A2":
        lam_n = An[0, 0]
        G = np.zeros((n, n), dtype=object) if exact else np.zeros((n, n))
        if exact:
            G[:, :] = Fraction(0)
        G[0, 0] = Fraction(1) if exact else 1.0
        for j in range(1, n):
            G[0, j] = Bn[0, j] / lam_n
            G[j, j] = 1 / lam_n
    else:
        q = Bn[0, 1]
        G = np.zeros((n, n), dtype=object) if exact else np.zeros((n, n))
        if exact:
            G[:, :] = Fraction(0)
        G[0, 0] = Fraction(1) if exact else 1.0
        for j in range(1, n):
            G[1, j] = Bn[0, j]
        for j in range(2, n):
            G[j, j] = 1 / q
    if not exact:
        An = np.asarray(An, dtype=float)
        Bn = np.asarray(Bn, dtype=float)
        G = np.asarray(G, dtype=float)
    K = S @ G @ Sinv @ H
    return CollinearityReport(case, A, B, H, commuter=K, basis=S, a_normal=An, b_normal=Bn, g_matrix=G, exact=exact)


# ---------------------------------------------------------------------------
# Jacobi matrices of orbit preserving maps

ROTATION_FAMILIES = ("rotation", "reflection")
NILPOTENT_FAMILIES = ("unipotent+", "unipotent-", "mixed+-", "mixed-+")
_NILPOTENT_SIGNS = {"unipotent+": (1, 1), "unipotent-": (-1, -1), "mixed+-": (1, -1), "mixed-+": (-1, 1)}


@dataclass(frozen=True)
class JacobiClass:
    family: str
    omega: float
    b: float

    def matrix(self) -> np.ndarray:
        """The family matrix for (family, omega) with the stored rate b."""
        bw = self.b * self.omega
        if self.family == "rotation":
            return np.array([[math.cos(bw), math.sin(bw)], [-math.sin(bw), math.cos(bw)]])
        if self.family == "reflection":
            return np.array([[math.cos(bw), math.sin(bw)], [math.sin(bw), -math.cos(bw)]])
        s0, s1 = _NILPOTENT_SIGNS[self.family]
        return np.array([[float(s0), bw], [0.0, float(s1)]])

    @property
    def in_flow_family(self) -> bool:
        """True when H equals the linear part of the time-omega flow map."""
        return self.family in ("rotation", "unipotent+")


def family_matrix(family: str, omega: float, b: float) -> np.ndarray:
    return JacobiClass(family, omega, b).matrix()


def tc_normal_form(A, tol: float = DEFAULT_TOL) -> tuple[str, float]:
    """Recognize A as [[0, b], [-b, 0]] ('rotation') or [[0, b], [0, 0]] ('nilpotent')."""
    A = np.asarray(as_square(A), dtype=float)
    if A.shape != (2, 2):
        raise ValueError("TC normal forms are 2 x 2")
    scale = max(inf_norm(A), 1e-300)
    a, b_, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    if max(abs(a), abs(d)) > tol * scale or b_ == 0.0:
        raise ValueError(f"not a TC normal form: {A.tolist()}")
    if abs(c + b_) <= tol * scale:
        return "rotation", float(b_)
    if abs(c) <= tol * scale:
        return "nilpotent", float(b_)
    raise ValueError(f"not a TC normal form: {A.tolist()}")


def normal_form_basis(A, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """(S, S^-1 A S) with S^-1 A S a TC normal form, for any nonzero 2 x 2 A
    whose eigenvalues are purely imaginary (nonzero) or both zero."""
    A = np.asarray(as_square(A), dtype=float)
    scale = inf_norm(A)
    if scale == 0.0:
        raise ZeroMap("A is the zero map")
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(tr) > tol * scale:
        raise ValueError("eigenvalues are not purely imaginary")
    if det > tol * scale * scale:
        nu = math.sqrt(det)
        w, v = np.linalg.eig(A)
        k = int(np.argmax(w.imag))
        vec = v[:, k]
        # A(p + iq) = i nu (p + iq)  =>  A p = -nu q, A q = nu p
        S = np.column_stack([vec.real, vec.imag])
        An = np.linalg.solve(S, A @ S)
        if An[0, 1] < 0:
            S = S[:, ::-1].copy()
            An = np.linalg.solve(S, A @ S)
        return S, An
    if abs(det) <= tol * scale * scale:
        e2 = np.array([1.0, 0.0]) if np.linalg.norm(A[:, 0]) >= np.linalg.norm(A[:, 1]) else np.array([0.0, 1.0])
        e1 = A @ e2
        S = np.column_stack([e1, e2])
        return S, np.linalg.solve(S, A @ S)
    raise ValueError("eigenvalues are real and nonzero")


def jacobi_classify(H, A, tol: float = DEFAULT_TOL) -> JacobiClass:
    """Match the Jacobi matrix H of an orbit preserving map against the families
    allowed by the linear part A of the field.

    A must be [[0, b], [-b, 0]], [[0, b], [0, 0]] or the transpose [[0, 0], [b, 0]]
    (handled by swapping coordinates). omega is on the principal branch: b*omega in (-pi, pi].
    """
    H = np.asarray(as_square(H), dtype=float)
    A = np.asarray(as_square(A), dtype=float)
    if H.shape != (2, 2):
        raise ValueError("H must be 2 x 2")
    scale = max(inf_norm(A), 1e-300)
    if abs(A[0, 1]) <= tol * scale and abs(A[1, 0]) > tol * scale:
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        A = swap @ A @ swap
        H = swap @ H @ swap
    kind, b = tc_normal_form(A, tol)
    if kind == "rotation":
        if abs(H[1, 1] - H[0, 0]) <= tol and abs(H[1, 0] + H[0, 1]) <= tol:
            family = "rotation"
        elif abs(H[1, 1] + H[0, 0]) <= tol and abs(H[1, 0] - H[0, 1]) <= tol:
            family = "reflection"
        else:
            raise NotInFamily(f"H={H.tolist()} is neither a rotation nor a reflection")
        c, s = H[0, 0], H[0, 1]
        if abs(math.hypot(c, s) - 1.0) > tol:
            raise NotInFamily(f"H={H.tolist()} is not orthogonal")
        omega = math.atan2(s, c) / b
        return JacobiClass(family, omega, b)
    if abs(H[1, 0]) > tol:
        raise NotInFamily(f"H={H.tolist()} is not upper triangular")
    signs = []
    for d in (H[0, 0], H[1, 1]):
        if abs(abs(d) - 1.0) > tol:
            raise NotInFamily(f"diagonal entry {d} of H is not +-1")
        signs.append(1 if d > 0 else -1)
    family = {v: k for k, v in _NILPOTENT_SIGNS.items()}[tuple(signs)]
    return JacobiClass(family, float(H[0, 1] / b), b)
