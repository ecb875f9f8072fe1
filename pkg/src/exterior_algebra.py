"""
This module implements constant-coefficient k-forms on R^n, oriented
k-planes, calibration fields and comass estimation.

A form is stored densely over the strictly increasing multi-indices of
{1, ..., n}, enumerated in lexicographic order. Its value on an ordered
frame e_1, ..., e_k is the sum over multi-indices I of the coefficient
of I times the k x k minor of the frame at the coordinates in I.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .errors import ContractViolationError
from .parallel import parallel_map

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]
Monomial = Tuple[float, Union[str, Sequence[int]]]

# Minors up to this degree are expanded by cofactors, larger ones use LU
LAPLACE_MAX_DEGREE = 4
ORTHONORMAL_TOL = 1e-12

COMASS_SAMPLES = 10_000
COMASS_ASCENT_ITERS = 200
COMASS_BATCH_SIZE = 1000
ASCENT_INITIAL_STEP = 0.2
ASCENT_STEP_DECAY = 0.5
ASCENT_FD_STEP = 1e-6

# The perturbation of a calibration field is measured on this many
# seeded points of B_2(0) (plus the origin)
FIELD_SAMPLE_COUNT = 256
FIELD_SAMPLE_RADIUS = 2.0


# Multi-index bookkeeping


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> Tuple[MultiIndex, ...]:
    """
    Enumerate the strictly increasing k-subsets of {1, ..., n}.

    Parameters:
        n: Ambient dimension.
        k: Degree.

    Returns:
        All C(n, k) multi-indices in lexicographic order.
    """
    if not 1 <= k <= n:
        raise ContractViolationError(f"degree {k} out of range for n={n}")
    return tuple(itertools.combinations(range(1, n + 1), k))


@lru_cache(maxsize=None)
def _index_table(n: int, k: int) -> np.ndarray:
    table = np.array(multi_indices(n, k), dtype=int).reshape(-1, k) - 1
    table.flags.writeable = False
    return table


@lru_cache(maxsize=None)
def _index_position(n: int, k: int) -> Dict[MultiIndex, int]:
    return {index: pos for pos, index in enumerate(multi_indices(n, k))}


def check_multi_index(indices: Sequence[int], n: int) -> MultiIndex:
    """
    Validate a multi-index.

    Parameters:
        indices: Candidate 1-based indices.
        n: Ambient dimension.

    Returns:
        The indices as a tuple.
    """
    result = tuple(int(i) for i in indices)
    if not result:
        raise ContractViolationError("empty multi-index")
    if any(a >= b for a, b in zip(result[:-1], result[1:])):
        raise ContractViolationError(f"{result} is not strictly increasing")
    if result[0] < 1 or result[-1] > n:
        raise ContractViolationError(f"{result} leaves the range [1, {n}]")
    return result


def permutation_sign(sequence: Sequence[int]) -> int:
    """
    Parity of the permutation sorting a sequence.

    Parameters:
        sequence: Distinct integers in any order.

    Returns:
        +1 or -1, and 0 when an entry repeats.
    """
    items = list(sequence)
    if len(set(items)) != len(items):
        return 0
    inversions = sum(
        1
        for i, j in itertools.combinations(range(len(items)), 2)
        if items[i] > items[j]
    )
    return -1 if inversions % 2 else 1


def _parse_indices(indices: Union[str, Sequence[int]]) -> MultiIndex:
    if isinstance(indices, str):
        return tuple(int(ch) for ch in indices)
    return tuple(int(i) for i in indices)


# Minor determinants


def _laplace_det(mats: np.ndarray) -> np.ndarray:
    """Cofactor expansion along the first row, batched over leading axes."""
    size = mats.shape[-1]
    if size == 1:
        return mats[..., 0, 0]
    if size == 2:
        return mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]

    total = np.zeros(mats.shape[:-2])
    rest = mats[..., 1:, :]
    for col in range(size):
        keep = [c for c in range(size) if c != col]
        sign = -1.0 if col % 2 else 1.0
        total = total + sign * mats[..., 0, col] * _laplace_det(rest[..., keep])
    return total


def minor_determinants(frames: np.ndarray, n: int, k: int) -> np.ndarray:
    """
    Compute all k x k minors of one or many frames.

    Parameters:
        frames: Array of shape (..., k, n), rows are the frame vectors.
        n: Ambient dimension.
        k: Number of frame vectors.

    Returns:
        Array of shape (..., C(n, k)) ordered like multi_indices(n, k).
    """
    frames = np.asarray(frames, dtype=float)
    if frames.shape[-2:] != (k, n):
        raise ContractViolationError(
            f"frame shape {frames.shape[-2:]} does not match (k, n) = ({k}, {n})"
        )
    table = _index_table(n, k)
    # blocks[..., i, row, col] = frames[..., row, table[i, col]]
    blocks = np.moveaxis(frames[..., table], -3, -2)
    if k <= LAPLACE_MAX_DEGREE:
        return _laplace_det(blocks)
    return np.linalg.det(blocks)


def orthonormalize_rows(vectors: np.ndarray) -> np.ndarray:
    """
    Orientation-preserving Gram-Schmidt of the rows of one or many frames.

    Parameters:
        vectors: Array of shape (..., k, n) with linearly independent rows.

    Returns:
        Orthonormal rows spanning the same oriented subspace.
    """
    vectors = np.asarray(vectors, dtype=float)
    q, r = np.linalg.qr(np.swapaxes(vectors, -1, -2))
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1)).copy()
    signs[signs == 0] = 1.0
    return np.swapaxes(q * signs[..., None, :], -1, -2)


def complement_rows(frame: np.ndarray) -> np.ndarray:
    """
    Orthonormal basis of the orthogonal complement of a frame's span.

    Parameters:
        frame: Array of shape (k, n) with orthonormal rows.

    Returns:
        Array of shape (n - k, n).
    """
    frame = np.asarray(frame, dtype=float)
    _, _, vt = np.linalg.svd(frame, full_matrices=True)
    return vt[frame.shape[0]:]


# Forms


@dataclass(frozen=True, eq=False)
class ConstantKForm:
    """
    A k-form on R^n with constant coefficients.

    Attributes:
        n: Ambient dimension.
        k: Degree.
        values: Coefficients ordered like multi_indices(n, k).
    """

    n: int
    k: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ContractViolationError(
                f"degree {self.k} out of range for n={self.n}"
            )
        values = np.array(self.values, dtype=float).reshape(-1)
        expected = len(multi_indices(self.n, self.k))
        if values.shape != (expected,):
            raise ContractViolationError(
                f"expected {expected} coefficients, got {values.size}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, n: int, k: int) -> "ConstantKForm":
        return cls(n, k, np.zeros(len(multi_indices(n, k))))

    @classmethod
    def from_terms(
        cls,
        n: int,
        k: int,
        terms: Dict[Sequence[int], float],
    ) -> "ConstantKForm":
        """
        Build a form from coefficients on increasing multi-indices.

        Parameters:
            n: Ambient dimension.
            k: Degree.
            terms: Mapping from 1-based increasing multi-index to coefficient.

        Returns:
            The form.
        """
        position = _index_position(n, k)
        values = np.zeros(len(position))
        for indices, coeff in terms.items():
            key = check_multi_index(indices, n)
            if len(key) != k:
                raise ContractViolationError(f"{key} is not of degree {k}")
            values[position[key]] += float(coeff)
        return cls(n, k, values)

    @classmethod
    def from_monomials(
        cls,
        n: int,
        monomials: Iterable[Monomial],
    ) -> "ConstantKForm":
        """
        Build a form from signed monomials written in any index order.

        A monomial (c, "4523") stands for c e^4 ^ e^5 ^ e^2 ^ e^3, which is
        stored as c times the parity of (4, 5, 2, 3) on the multi-index
        (2, 3, 4, 5).

        Parameters:
            n: Ambient dimension.
            monomials: Pairs (coefficient, indices) with indices given as a
                digit string or an integer sequence.

        Returns:
            The form.
        """
        parsed = [(float(c), _parse_indices(idx)) for c, idx in monomials]
        if not parsed:
            raise ContractViolationError("no monomials given")
        k = len(parsed[0][1])
        position = _index_position(n, k)
        values = np.zeros(len(position))

        for coeff, indices in parsed:
            if len(indices) != k:
                raise ContractViolationError(
                    f"monomial {indices} is not of degree {k}"
                )
            sign = permutation_sign(indices)
            if sign == 0:
                continue
            key = check_multi_index(sorted(indices), n)
            values[position[key]] += sign * coeff

        return cls(n, k, values)

    def terms(self) -> Dict[MultiIndex, float]:
        """Nonzero coefficients keyed by increasing multi-index."""
        return {
            index: float(value)
            for index, value in zip(multi_indices(self.n, self.k), self.values)
            if value != 0.0
        }

    def coefficient(self, indices: Union[str, Sequence[int]]) -> float:
        """
        Coefficient of a monomial given in any index order.

        Parameters:
            indices: 1-based indices, possibly unsorted.

        Returns:
            The signed coefficient, 0 for repeated indices.
        """
        indices = _parse_indices(indices)
        sign = permutation_sign(indices)
        if sign == 0:
            return 0.0
        key = check_multi_index(sorted(indices), self.n)
        return sign * float(self.values[_index_position(self.n, self.k)[key]])

    def norm(self) -> float:
        """
        Euclidean norm of the coefficients.

        For an orthonormal frame the minors have unit Euclidean norm, so
        this bounds |form[L]| on every oriented plane L.
        """
        return float(np.linalg.norm(self.values))

    def _check_compatible(self, other: "ConstantKForm"):
        if (self.n, self.k) != (other.n, other.k):
            raise ContractViolationError(
                f"forms of type ({self.n}, {self.k}) and "
                f"({other.n}, {other.k}) cannot be combined"
            )

    def __add__(self, other: "ConstantKForm") -> "ConstantKForm":
        self._check_compatible(other)
        return ConstantKForm(self.n, self.k, self.values + other.values)

    def __sub__(self, other: "ConstantKForm") -> "ConstantKForm":
        self._check_compatible(other)
        return ConstantKForm(self.n, self.k, self.values - other.values)

    def __neg__(self) -> "ConstantKForm":
        return ConstantKForm(self.n, self.k, -self.values)

    def __mul__(self, scalar: float) -> "ConstantKForm":
        return ConstantKForm(self.n, self.k, float(scalar) * self.values)

    __rmul__ = __mul__

    def evaluate_frames(self, frames: np.ndarray) -> np.ndarray:
        """
        Evaluate on a batch of frames, orthonormal or not.

        Parameters:
            frames: Array of shape (..., k, n).

        Returns:
            Array of shape (...).
        """
        return minor_determinants(frames, self.n, self.k) @ self.values

    def evaluate_frame(self, vectors: np.ndarray) -> float:
        """
        Evaluate on an ordered list of k vectors without normalizing them.

        Parameters:
            vectors: Array of shape (k, n).

        Returns:
            The multilinear, alternating value.
        """
        return float(self.evaluate_frames(np.asarray(vectors, dtype=float)))

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "terms": [
                {"indices": list(index), "coeff": coeff}
                for index, coeff in self.terms().items()
            ],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ConstantKForm":
        n, k = int(data["n"]), int(data["k"])
        return cls.from_terms(
            n,
            k,
            {tuple(term["indices"]): term["coeff"] for term in data["terms"]},
        )


def pullback(form: ConstantKForm, matrix: np.ndarray) -> ConstantKForm:
    """
    Pull a constant form back through a linear map.

    Parameters:
        form: A form on R^n.
        matrix: Array of shape (n, m), the map R^m -> R^n.

    Returns:
        The form A*form on R^m, (A*form)[v_1..v_k] = form[A v_1..A v_k].
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != form.n:
        raise ContractViolationError(
            f"map of shape {matrix.shape} cannot pull back a form on R^{form.n}"
        )
    source = matrix.shape[1]
    images = matrix.T[_index_table(source, form.k)]
    return ConstantKForm(source, form.k, form.evaluate_frames(images))


# Oriented planes


@dataclass(frozen=True, eq=False)
class OrientedPlane:
    """
    An affine oriented k-plane.

    Attributes:
        base: A point of the plane, shape (n,).
        frame: Ordered orthonormal basis of the linear part, shape (k, n).
            Its ordering is the orientation.
    """

    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        base = np.array(self.base, dtype=float).reshape(-1)
        frame = np.array(self.frame, dtype=float)
        if frame.ndim == 1:
            frame = frame[None, :]
        if (
            frame.ndim != 2
            or frame.shape[1] != base.shape[0]
            or not 1 <= frame.shape[0] <= frame.shape[1]
        ):
            raise ContractViolationError(
                f"frame of shape {frame.shape} does not fit base in "
                f"R^{base.shape[0]}"
            )
        gram = frame @ frame.T
        error = np.max(np.abs(gram - np.eye(frame.shape[0])))
        if error > ORTHONORMAL_TOL:
            raise ContractViolationError(
                f"frame is not orthonormal (deviation {error:.3g})"
            )
        base.flags.writeable = False
        frame.flags.writeable = False
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "frame", frame)

    @property
    def n(self) -> int:
        return self.frame.shape[1]

    @property
    def k(self) -> int:
        return self.frame.shape[0]

    @classmethod
    def from_vectors(
        cls,
        base: np.ndarray,
        vectors: np.ndarray,
    ) -> "OrientedPlane":
        """
        Plane through `base` spanned by `vectors`, with their orientation.

        Parameters:
            base: A point, shape (n,).
            vectors: Linearly independent vectors, shape (k, n).

        Returns:
            The oriented plane.
        """
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        _, r = np.linalg.qr(vectors.T)
        scale = max(np.max(np.abs(vectors)), 1e-300)
        if np.min(np.abs(np.diagonal(r))) <= 1e-12 * scale:
            raise ContractViolationError("spanning vectors are dependent")
        return cls(base, orthonormalize_rows(vectors))

    @classmethod
    def coordinate(
        cls,
        n: int,
        axes: Sequence[int],
        base: Optional[np.ndarray] = None,
    ) -> "OrientedPlane":
        """
        Plane spanned by coordinate axes, in the given order.

        Parameters:
            n: Ambient dimension.
            axes: 1-based axis numbers; their order is the orientation.
            base: Base point, the origin by default.

        Returns:
            The oriented plane span(e_axes[0], ..., e_axes[-1]).
        """
        frame = np.zeros((len(axes), n))
        for row, axis in enumerate(axes):
            frame[row, int(axis) - 1] = 1.0
        if base is None:
            base = np.zeros(n)
        return cls(base, frame)

    def projector(self) -> np.ndarray:
        """Orthogonal projection matrix onto the linear part."""
        return self.frame.T @ self.frame

    def flipped(self) -> "OrientedPlane":
        """The same plane with the opposite orientation."""
        frame = self.frame.copy()
        frame[0] = -frame[0]
        return OrientedPlane(self.base, frame)

    def same_orientation(self, other: "OrientedPlane") -> bool:
        """
        Whether two frames of the same subspace induce the same orientation.
        """
        return bool(np.linalg.det(self.frame @ other.frame.T) > 0)

    def coordinates(self, points: np.ndarray) -> np.ndarray:
        """Frame coordinates of the projections of points."""
        return (np.asarray(points, dtype=float) - self.base) @ self.frame.T

    def embed(self, coords: np.ndarray) -> np.ndarray:
        """Points of the plane with the given frame coordinates."""
        return self.base + np.asarray(coords, dtype=float) @ self.frame

    def to_json(self) -> Dict[str, Any]:
        return {
            "base": [float(v) for v in self.base],
            "frame": [[float(v) for v in row] for row in self.frame],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "OrientedPlane":
        return cls(np.array(data["base"]), np.array(data["frame"]))


def evaluate(form: ConstantKForm, plane: OrientedPlane) -> float:
    """
    Evaluate a form on an oriented plane.

    Parameters:
        form: A constant k-form on R^n.
        plane: An oriented k-plane in R^n.

    Returns:
        form[e_1, ..., e_k] for the plane's oriented orthonormal frame.
    """
    if (plane.n, plane.k) != (form.n, form.k):
        raise ContractViolationError(
            f"form of type ({form.n}, {form.k}) cannot be evaluated on a "
            f"{plane.k}-plane in R^{plane.n}"
        )
    return form.evaluate_frame(plane.frame)


# Calibration fields


@dataclass(frozen=True, eq=False)
class SinusoidalPerturbation:
    """
    Bounded perturbation a sin(w.x + phase) D of a constant form.

    Attributes:
        amplitude: Supremum of the coefficient norm of the perturbation.
        wavevector: w, shape (n,).
        direction: Unit coefficient vector D, shape (C(n, k),).
        phase: Phase offset.
    """

    amplitude: float
    wavevector: np.ndarray
    direction: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        direction = np.array(self.direction, dtype=float).reshape(-1)
        length = np.linalg.norm(direction)
        if length == 0:
            raise ContractViolationError("perturbation direction is zero")
        object.__setattr__(self, "direction", direction / length)
        object.__setattr__(
            self, "wavevector", np.array(self.wavevector, dtype=float)
        )

    @classmethod
    def random(
        cls,
        n: int,
        k: int,
        amplitude: float,
        seed: int = 0,
        frequency: float = 1.0,
    ) -> "SinusoidalPerturbation":
        rng = np.random.default_rng(seed)
        return cls(
            amplitude=amplitude,
            wavevector=frequency * rng.standard_normal(n),
            direction=rng.standard_normal(len(multi_indices(n, k))),
            phase=float(rng.uniform(0, 2 * math.pi)),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (
            self.amplitude
            * math.sin(float(self.wavevector @ x) + self.phase)
            * self.direction
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "amplitude": self.amplitude,
            "wavevector": [float(v) for v in self.wavevector],
            "direction": [float(v) for v in self.direction],
            "phase": self.phase,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "SinusoidalPerturbation":
        return cls(
            data["amplitude"], data["wavevector"], data["direction"], data["phase"]
        )


@dataclass(frozen=True, eq=False)
class LocalizedPerturbation:
    """A perturbation seen through the map y -> center + scale * y."""

    inner: Callable[[np.ndarray], np.ndarray]
    center: np.ndarray
    scale: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.inner(self.center + self.scale * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class CalibrationField:
    """
    A k-form field Omega = Omega_0 + perturbation with |Omega - Omega_0| <= eps.

    Attributes:
        constant: The constant part Omega_0.
        epsilon: Recorded bound on the coefficient norm of the perturbation.
        perturbation: Map from a point to coefficient deltas, or None.
        sample_count: Number of seeded points the bound is measured on.
        seed: Seed of the measuring points.
    """

    constant: ConstantKForm
    epsilon: float = 0.0
    perturbation: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sample_count: int = FIELD_SAMPLE_COUNT
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ContractViolationError("epsilon must be nonnegative")
        if self.perturbation is not None:
            measured = self.measure_perturbation()
            if measured > self.epsilon * (1 + 1e-12):
                raise ContractViolationError(
                    f"perturbation reaches {measured:.6g}, above the recorded "
                    f"epsilon {self.epsilon:.6g}"
                )

    @property
    def n(self) -> int:
        return self.constant.n

    @property
    def k(self) -> int:
        return self.constant.k

    def sample_points(self) -> np.ndarray:
        """Seeded points of B_2(0), the origin first."""
        rng = np.random.default_rng(self.seed)
        directions = rng.standard_normal((self.sample_count, self.n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = FIELD_SAMPLE_RADIUS * rng.random(self.sample_count) ** (1 / self.n)
        return np.vstack([np.zeros(self.n), directions * radii[:, None]])

    def delta_at(self, x: np.ndarray) -> np.ndarray:
        """Coefficient deltas of the perturbation at a point."""
        if self.perturbation is None:
            return np.zeros_like(self.constant.values)
        return np.asarray(self.perturbation(np.asarray(x, dtype=float)), dtype=float)

    def measure_perturbation(self, points: Optional[np.ndarray] = None) -> float:
        """
        Largest coefficient norm of the perturbation over sample points.

        Parameters:
            points: Points to measure at, the seeded sample by default.

        Returns:
            The measured sup-norm.
        """
        if points is None:
            points = self.sample_points()
        if self.perturbation is None:
            return 0.0
        return max(float(np.linalg.norm(self.delta_at(x))) for x in points)

    def at(self, x: np.ndarray) -> ConstantKForm:
        """The form Omega(x)."""
        return ConstantKForm(self.n, self.k, self.constant.values + self.delta_at(x))

    def evaluate(
        self,
        plane: OrientedPlane,
        x: Optional[np.ndarray] = None,
    ) -> float:
        """
        Evaluate Omega(x)[plane], x defaulting to the plane's base point.
        """
        if self.perturbation is None:
            return evaluate(self.constant, plane)
        if x is None:
            x = plane.base
        return evaluate(self.at(x), plane)

    def localized(self, center: np.ndarray, scale: float) -> "CalibrationField":
        """
        The field pulled through y -> center + scale * y.

        Values on orthonormal frames are unchanged by the dilation, so only
        the points where the perturbation is sampled move.
        """
        if self.perturbation is None:
            return self
        return CalibrationField(
            constant=self.constant,
            epsilon=self.epsilon,
            perturbation=LocalizedPerturbation(
                self.perturbation, np.asarray(center, dtype=float), float(scale)
            ),
            sample_count=self.sample_count,
            seed=self.seed,
        )


# Comass


def random_frames(
    rng: np.random.Generator,
    count: int,
    n: int,
    k: int,
) -> np.ndarray:
    """
    Haar-random oriented orthonormal k-frames in R^n.

    Returns:
        Array of shape (count, k, n).
    """
    gauss = rng.standard_normal((count, k, n))
    return orthonormalize_rows(gauss)


def _flip(frame: np.ndarray) -> np.ndarray:
    frame = frame.copy()
    frame[0] = -frame[0]
    return frame


def _ascend(
    form: ConstantKForm,
    frame: np.ndarray,
    value: float,
    iters: int,
) -> float:
    """
    Projected-gradient ascent of the form over oriented k-frames.

    Only improving steps are accepted, the step halves on failure.
    """
    n, k = form.n, form.k
    if k == n:
        return value

    step = ASCENT_INITIAL_STEP
    for _ in range(iters):
        complement = complement_rows(frame)
        # tangent directions: frame vector a tilted towards complement vector b
        directions = np.zeros((k * (n - k), k, n))
        for a in range(k):
            directions[a * (n - k):(a + 1) * (n - k), a, :] = complement

        plus = orthonormalize_rows(frame + ASCENT_FD_STEP * directions)
        minus = orthonormalize_rows(frame - ASCENT_FD_STEP * directions)
        grad = (form.evaluate_frames(plus) - form.evaluate_frames(minus)) / (
            2 * ASCENT_FD_STEP
        )
        length = np.linalg.norm(grad)
        if length < 1e-12:
            break

        tangent = np.einsum("d,dkn->kn", grad / length, directions)
        candidate = orthonormalize_rows(frame + step * tangent)
        candidate_value = form.evaluate_frame(candidate)
        if candidate_value > value:
            frame, value = candidate, candidate_value
        else:
            step *= ASCENT_STEP_DECAY

    return value


def _comass_batch(
    form: ConstantKForm,
    batch: Tuple[int, int],
    batch_size: int,
    ascent_iters: int,
    seed: int,
) -> float:
    index, count = batch
    rng = np.random.default_rng([seed, index])
    # the full batch is always drawn so smaller counts are prefixes
    frames = random_frames(rng, batch_size, form.n, form.k)[:count]
    values = form.evaluate_frames(frames)
    best = int(np.argmax(np.abs(values)))
    frame, value = frames[best], float(values[best])
    if value < 0:
        frame, value = _flip(frame), -value
    return _ascend(form, frame, value, ascent_iters)


def comass(
    form: ConstantKForm,
    samples: int = COMASS_SAMPLES,
    ascent_iters: int = COMASS_ASCENT_ITERS,
    seed: int = 0,
    batch_size: int = COMASS_BATCH_SIZE,
    workers: int = 1,
) -> float:
    """
    Lower estimate of the comass sup_L form[L] over oriented k-planes.

    Frames are sampled in seeded batches; the best frame of every batch
    is improved by local ascent and the batch results are reduced in
    batch order.

    Parameters:
        form: The form.
        samples: Number of random frames.
        ascent_iters: Ascent steps from the best frame of each batch.
        seed: Seed of the batch generators.
        batch_size: Frames per batch.
        workers: Pool width for the batches.

    Returns:
        The estimate; exactly 0 for the zero form.
    """
    if samples < 1:
        raise ContractViolationError("comass needs at least one sample")

    batches: List[Tuple[int, int]] = [
        (index, min(batch_size, samples - index * batch_size))
        for index in range(math.ceil(samples / batch_size))
    ]
    job = partial(
        _comass_batch,
        form,
        batch_size=batch_size,
        ascent_iters=ascent_iters,
        seed=seed,
    )
    best = 0.0
    for value in parallel_map(job, batches, workers):
        best = max(best, value)

    logger.debug(
        "comass of (%d, %d)-form over %d samples: %.9f",
        form.n,
        form.k,
        samples,
        best,
    )
    return float(best)
