"""d-horospheres ξ = k a_t n_u ξ₀ of H^n, their membership test and the stabilizer of the basic one."""
from logging import Logger, getLogger
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, root_validator, validator
from scipy.special import roots_gegenbauer, roots_jacobi
from scipy.stats import special_ortho_group

from .exceptions import ContractViolation, ParameterError
from .hyperboloid import (
    ConeVector,
    HyperbolicPoint,
    LorentzElement,
    _check_rotation,
    a_matrices,
    horospherical_points,
    k_matrices,
    make_a,
    make_k,
    make_n,
    minkowski_matrix,
    n_matrices,
    nak_arrays,
)
from .quadrature import sphere_rule
from .utils import FloatArray, MemoCache, as_float_array

logger: Logger = getLogger(__name__)

MEMBERSHIP_TOLERANCE = 1e-9


def check_dimensions(n: int, d: int) -> None:
    """Validates 1 ≤ d ≤ n - 1 and n ≥ 2

    :raises ParameterError: when the pair is out of range
    """
    if n < 2 or not 1 <= d <= n - 1:
        raise ParameterError(f"Expected n >= 2 and 1 <= d <= n - 1, got n = {n}, d = {d}")


def embed_u(u: npt.ArrayLike, n: int) -> FloatArray:
    """Places u ∈ R^{n-1-d} in the first coordinates of R^{n-1}"""
    values = as_float_array(u)
    out = np.zeros(values.shape[:-1] + (n - 1,))
    out[..., : values.shape[-1]] = values
    return out


def embed_w(w: npt.ArrayLike, n: int) -> FloatArray:
    """Places w ∈ R^d in the last coordinates of R^{n-1}"""
    values = as_float_array(w)
    out = np.zeros(values.shape[:-1] + (n - 1,))
    if values.shape[-1]:
        out[..., -values.shape[-1] :] = values
    return out


class Horosphere(BaseModel):
    """The d-horosphere k a_t n_u ξ₀, stored through its parameters"""

    n: int
    """Dimension of the hyperbolic space"""
    d: int
    """Dimension of the horosphere"""
    k: np.ndarray
    """Rotation block in SO(n)"""
    t: float = 0.0
    """Abelian parameter"""
    u: np.ndarray
    """Nilpotent parameter in R^{n-1-d}"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("k", "u", pre=True)
    def as_array(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
        return array

    @root_validator
    def consistent_parameters(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        n, d, k, u = values.get("n"), values.get("d"), values.get("k"), values.get("u")
        if n is None or d is None or k is None or u is None:
            return values
        check_dimensions(n, d)
        if k.shape != (n, n):
            raise ContractViolation(f"Expected a rotation block of shape {(n, n)}, got {k.shape}")
        _check_rotation(k)
        if u.shape != (n - 1 - d,):
            raise ContractViolation(f"Expected u of length {n - 1 - d}, got shape {u.shape}")
        return values

    def group_element(self) -> LorentzElement:
        """k a_t n_u"""
        return make_k(self.k) @ make_a(self.t, self.n) @ make_n(embed_u(self.u, self.n))

    def points(self, w: npt.ArrayLike) -> FloatArray:
        """The points k a_t n_u n_w x₀ for a stack of w ∈ R^d

        :param w: Array of shape (..., d)
        :returns: Ambient coordinates of shape (..., n + 1)
        """
        offsets = as_float_array(w)
        if offsets.shape[-1] != self.d:
            raise ContractViolation(f"Expected offsets of length {self.d}, got shape {offsets.shape}")
        v = embed_u(self.u, self.n) + embed_w(offsets, self.n)
        outer = k_matrices(self.k) @ a_matrices(self.t, self.n)
        return np.einsum("ij,...j->...i", outer, horospherical_points(v, np.zeros(v.shape[:-1])))


class BasicHorosphereSpec(BaseModel):
    """The basic horosphere ξ₀ = H^{d+1} ∩ {x: [x, b₀] = 1}"""

    n: int
    d: int
    b0: ConeVector

    @root_validator(pre=True)
    def default_normal(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        n, d = values.get("n"), values.get("d")
        if n is not None and d is not None:
            check_dimensions(n, d)
            if values.get("b0") is None:
                coords = np.zeros(n + 1)
                coords[n - 1] = coords[n] = 1.0
                values["b0"] = ConeVector(coords=coords)
        return values


def basic_horosphere(n: int, d: int) -> Horosphere:
    """ξ₀ itself: k = I, t = 0, u = 0

    :raises ParameterError: when d is out of range
    """
    check_dimensions(n, d)
    return Horosphere(n=n, d=d, k=np.eye(n), t=0.0, u=np.zeros(n - 1 - d))


def horosphere_parameters(g: npt.ArrayLike, d: int) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """Batch (k, t, u) of the horospheres g ξ₀ for a stack of Lorentz matrices

    g⁻¹ = n_v a_t k gives g = k⁻¹ a_{-t} n_{-v}; the last d coordinates of -v are absorbed by ξ₀.
    """
    matrices = as_float_array(g)
    n = matrices.shape[-1] - 1
    form = minkowski_matrix(n)
    inverse = form @ np.swapaxes(matrices, -1, -2) @ form
    v, t, k = nak_arrays(inverse)
    return np.swapaxes(k, -1, -2), -t, -v[..., : n - 1 - d]


def horosphere_from_group(g: LorentzElement, d: int) -> Horosphere:
    """The horosphere g ξ₀ in the form k a_t n_u ξ₀

    :raises DecompositionFailure: when g⁻¹ cannot be factored
    """
    check_dimensions(g.n, d)
    k, t, u = horosphere_parameters(g.matrix, d)
    return Horosphere(n=g.n, d=d, k=k, t=float(t), u=u)


def contains(
    xi: Horosphere, x: Union[HyperbolicPoint, npt.ArrayLike], tol: float = MEMBERSHIP_TOLERANCE
) -> Union[bool, np.ndarray]:
    """Whether x lies on ξ

    y = (k a_t n_u)⁻¹ x must satisfy [y, b₀] = 1 and y_j = 0 for j ≤ n - 1 - d; both within tol scaled by
    the size of x.

    :param xi: The horosphere
    :param x: A point or a stack of ambient coordinates
    :param tol: The membership tolerance
    """
    coords = x.coords if isinstance(x, HyperbolicPoint) else as_float_array(x)
    if coords.shape[-1] != xi.n + 1:
        raise ContractViolation(f"Point of length {coords.shape[-1]} does not match n = {xi.n}")
    inverse = n_matrices(-embed_u(xi.u, xi.n)) @ a_matrices(-xi.t, xi.n) @ k_matrices(xi.k.T)
    y = np.einsum("ij,...j->...i", inverse, coords)
    scale = tol * np.maximum(1.0, np.max(np.abs(coords), axis=-1))
    on_plane = np.abs(y[..., -1] - y[..., -2] - 1.0) <= scale
    in_slice = np.all(np.abs(y[..., : xi.n - 1 - xi.d]) <= scale[..., None], axis=-1)
    result = on_plane & in_slice
    return bool(result) if np.ndim(result) == 0 else result


def sample_offsets(d: int, samples: int, seed: int = 0) -> FloatArray:
    """Centered unit Gaussian offsets w ∈ R^d used to sample points of a horosphere"""
    return np.random.default_rng(seed).standard_normal((samples, d))


def stabilizer_check(
    m_alpha_beta: LorentzElement, n_v: LorentzElement, samples: int, d: Optional[int] = None, seed: int = 0
) -> bool:
    """Whether g = m n_v maps sample points of ξ₀ back onto ξ₀ and m n_v = n_{βv} m

    :param m_alpha_beta: Block rotation acting on the first n - 1 coordinates
    :param n_v: Nilpotent element with v supported on the last d coordinates
    :param samples: Number of sampled points of ξ₀
    :param d: Dimension of ξ₀, n - 1 by default
    :param seed: Seed of the sampled points
    """
    n = m_alpha_beta.n
    d = n - 1 if d is None else d
    basic = basic_horosphere(n, d)
    g = m_alpha_beta @ n_v
    images = np.einsum("ij,...j->...i", g.matrix, basic.points(sample_offsets(d, samples, seed)))
    if not np.all(contains(basic, images)):
        logger.debug("Sampled points leave the basic horosphere")
        return False
    v = n_v.matrix[n, : n - 1]
    beta = m_alpha_beta.matrix[: n - 1, : n - 1]
    commuted = n_matrices(beta @ v) @ m_alpha_beta.matrix
    scale = max(1.0, float(np.max(np.abs(g.matrix))))
    return bool(np.max(np.abs(g.matrix - commuted)) <= MEMBERSHIP_TOLERANCE * scale)


def xi_dimension(n: int, d: int) -> int:
    """Dimension (n - d)(d + 2) - 1 of the manifold of d-horospheres

    >>> xi_dimension(3, 1), xi_dimension(3, 2)
    (5, 3)
    """
    check_dimensions(n, d)
    return (n - d) * (d + 2) - 1


def random_rotation(dim: int, rng: np.random.Generator) -> FloatArray:
    """A Haar distributed element of SO(dim)"""
    if dim == 1:
        return np.ones((1, 1))
    return np.asarray(special_ortho_group.rvs(dim, random_state=rng), dtype=np.float64)


def stabilizer_block(n: int, d: int, rng: np.random.Generator) -> LorentzElement:
    """A random m_{α,β} ∈ S(O(n-1-d) × O(d)) embedded in G"""
    check_dimensions(n, d)
    q = n - 1 - d
    block = np.eye(n + 1)
    if q:
        block[:q, :q] = random_rotation(q, rng)
    block[q : n - 1, q : n - 1] = random_rotation(d, rng)
    if rng.random() < 0.5 and q:
        block[0, :q] *= -1.0
        block[n - 2, q : n - 1] *= -1.0
    return LorentzElement(matrix=block)


def frame_rotation(theta: npt.ArrayLike) -> FloatArray:
    """Stack of rotations R ∈ SO(n) with R e_n = θ, built from a Householder reflection

    The identity is returned where θ = e_n.
    """
    directions = as_float_array(theta)
    n = directions.shape[-1]
    target = np.zeros(n)
    target[-1] = 1.0
    w = target - directions
    norm = np.sum(w**2, axis=-1)
    safe = np.where(norm > 1e-24, norm, 1.0)
    reflection = np.eye(n) - 2.0 * w[..., :, None] * w[..., None, :] / safe[..., None, None]
    flip = np.ones(n)
    flip[0] = -1.0
    rotation = reflection * flip
    return np.where((norm > 1e-24)[..., None, None], rotation, np.eye(n))


def _orthonormal_completion(vectors: FloatArray) -> FloatArray:
    # Columns: the given orthonormal vectors first, then a basis of their complement
    count, dim = vectors.shape[-2], vectors.shape[-1]
    stacked = np.concatenate(
        [np.swapaxes(vectors, -1, -2), np.broadcast_to(np.eye(dim), vectors.shape[:-2] + (dim, dim))], axis=-1
    )
    q, r = np.linalg.qr(stacked)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1)[..., :count])
    q[..., :count] = q[..., :count] * np.where(signs == 0, 1.0, signs)[..., None, :]
    return q


def _stiefel_rule(dim: int, count: int, order: int) -> Tuple[FloatArray, FloatArray]:
    # Nested sphere rules for `count` orthonormal vectors in R^dim, shapes (m, count, dim) and (m,)
    nodes, weights = sphere_rule(dim, order)
    frames = nodes[:, None, :]
    for index in range(1, count):
        sub_nodes, sub_weights = sphere_rule(dim - index, order)
        basis = _orthonormal_completion(frames)[..., index:]
        extra = np.einsum("mij,pj->mpi", basis, sub_nodes)
        frames = np.concatenate(
            [np.repeat(frames, sub_nodes.shape[0], axis=0), extra.reshape(-1, 1, dim)], axis=1
        )
        weights = (weights[:, None] * sub_weights[None, :]).ravel()
    return frames, weights


def grassmann_frames(n: int, d: int, order: int) -> Tuple[FloatArray, FloatArray]:
    """Frames Q ∈ SO(n-1) whose last d columns sample Gr(d, n-1) uniformly, with normalised weights"""
    dim = n - 1
    q = dim - d
    if d == dim:
        return np.eye(dim)[None], np.ones(1)
    sampled = min(d, q)
    frames, weights = _stiefel_rule(dim, sampled, order)
    completed = _orthonormal_completion(frames)
    if sampled == d:
        completed = np.concatenate([completed[..., sampled:], completed[..., :sampled]], axis=-1)
    negative = np.linalg.det(completed) < 0
    completed[negative, :, 0] *= -1.0
    return completed, weights


_K_RULES: MemoCache[Tuple[int, int, int], Tuple[FloatArray, FloatArray]] = MemoCache("K rules")


def _build_k_rule(n: int, d: int, order: int) -> Tuple[FloatArray, FloatArray]:
    directions, direction_weights = sphere_rule(n, order)
    rotations = frame_rotation(directions)
    frames, frame_weights = grassmann_frames(n, d, order)
    ks = rotations[:, None] @ k_matrices(frames)[None, :, :n, :n]
    weights = direction_weights[:, None] * frame_weights[None, :]
    ks, weights = ks.reshape(-1, n, n), weights.ravel()
    ks.setflags(write=False)
    weights.setflags(write=False)
    return ks, weights


def k_rule(n: int, d: int, order: int) -> Tuple[FloatArray, FloatArray]:
    """Quadrature over K / M_d for integrands of k that only see the horosphere k a_t ξ₀

    k = R(θ) diag(Q, 1) with θ from a rule on S^{n-1} and Q from grassmann_frames; weights sum to one.

    :returns: Rotations of shape (m, n, n) and weights of shape (m,)
    """
    check_dimensions(n, d)
    return _K_RULES.get_or_insert((n, d, order), lambda: _build_k_rule(n, d, order))


_INVARIANT_RULES: MemoCache[Tuple[int, int, int], Tuple[FloatArray, FloatArray]] = MemoCache("invariant K rules")


def _block_pairs(d: int, q: int, order: int) -> Tuple[FloatArray, FloatArray]:
    # Norms of the U and W parts of a unit vector of R^{n-1}, signed for blocks of dimension one
    if q == 0:
        return np.array([[0.0, 1.0]]), np.ones(1)
    nodes, weights = roots_jacobi(order, q / 2.0 - 1.0, d / 2.0 - 1.0)
    share = (1.0 + nodes) / 2.0
    pairs = np.column_stack([np.sqrt(1.0 - share), np.sqrt(share)])
    weights = weights / np.sum(weights)
    for column, dim in ((0, q), (1, d)):
        if dim == 1:
            flipped = pairs.copy()
            flipped[:, column] *= -1.0
            pairs = np.concatenate([pairs, flipped])
            weights = np.concatenate([weights, weights]) / 2.0
    return pairs, weights


def _build_invariant_rule(n: int, d: int, order: int) -> Tuple[FloatArray, FloatArray]:
    if n <= 3:
        directions, weights = sphere_rule(n, order)
    else:
        heights, height_weights = roots_gegenbauer(order, (n - 2) / 2.0)
        pairs, pair_weights = _block_pairs(d, n - 1 - d, order)
        ring = np.sqrt(np.clip(1.0 - heights**2, 0.0, None))
        grid = np.zeros((heights.size, pairs.shape[0], n))
        grid[..., 0] = ring[:, None] * pairs[None, :, 0]
        grid[..., n - 2] = ring[:, None] * pairs[None, :, 1]
        grid[..., n - 1] = heights[:, None]
        directions = grid.reshape(-1, n)
        weights = (height_weights[:, None] / np.sum(height_weights) * pair_weights[None, :]).ravel()
        weights.setflags(write=False)
    ks = np.ascontiguousarray(np.swapaxes(frame_rotation(directions), -1, -2))
    ks.setflags(write=False)
    return ks, weights


def invariant_k_rule(n: int, d: int, order: int) -> Tuple[FloatArray, FloatArray]:
    """Quadrature over K for k ↦ φ(a_r k a_t ξ₀) when φ is unchanged by every rotation about x₀

    Such integrands only depend on θ = k⁻¹ e_n, and only through θ_n and the parts of θ along the first
    n - 1 - d and the last d coordinates. k = R(θ)ᵀ then runs over a rule on S^{n-1}, reduced for n >= 4 to a
    Gauss-Gegenbauer rule in θ_n times a Gauss-Jacobi rule in the share of the last d coordinates.

    :returns: Rotations of shape (m, n, n) and weights of shape (m,)
    """
    check_dimensions(n, d)
    if order < 1:
        raise ContractViolation(f"An invariant K rule needs order >= 1, got {order}")
    return _INVARIANT_RULES.get_or_insert((n, d, order), lambda: _build_invariant_rule(n, d, order))
