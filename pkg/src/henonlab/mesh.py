"""Graded radial meshes on [0, 1] and nodal fields vanishing at r = 1."""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gamma

from .errors import DomainError, MeshMismatch


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0)


def ball_volume(n: int) -> float:
    return sphere_area(n) / n


@dataclass(frozen=True, eq=False)
class RadialMesh:
    """Nodes r_i = (i/M)^grading, i = 0..M, with dual cells between midpoints.

    ``quad_weights[i]`` is the n-dimensional volume of the shell over the
    dual cell of node i, so the weights sum to the volume of the unit ball.
    """

    M: int
    n: int
    grading: float = 2.0
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 1:
            raise DomainError("mesh needs M >= 1")
        if self.grading < 1.0:
            raise DomainError("grading exponent must be >= 1")
        nodes = (np.arange(self.M + 1) / self.M) ** self.grading
        nodes[-1] = 1.0
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @cached_property
    def h(self) -> np.ndarray:
        """Interval lengths r_{i+1} - r_i."""
        return np.diff(self.nodes)

    @cached_property
    def cell_edges(self) -> np.ndarray:
        """Dual cell boundaries: 0, interval midpoints, 1 (length M + 2)."""
        mid = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return np.concatenate(([0.0], mid, [1.0]))

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """int over the dual cell of r^{n-1} dr."""
        e = self.cell_edges
        return (e[1:] ** self.n - e[:-1] ** self.n) / self.n

    @cached_property
    def quad_weights(self) -> np.ndarray:
        return sphere_area(self.n) * self.radial_weights

    @cached_property
    def interval_volumes(self) -> np.ndarray:
        """Volume of the shell over each primal interval [r_i, r_{i+1}]."""
        r = self.nodes
        return sphere_area(self.n) * (r[1:] ** self.n - r[:-1] ** self.n) / self.n

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.M}:{self.n}:{self.grading!r}".encode())
        h.update(np.ascontiguousarray(self.nodes).tobytes())
        return h.hexdigest()[:16]

    def same_as(self, other: "RadialMesh") -> bool:
        return self is other or self.digest == other.digest

    def interval_gauss(self, order: int = 4):
        """Gauss-Legendre points and weights on every primal interval.

        Returns (x, wts, loc) with arrays of shape (M, order); ``loc`` is the
        barycentric coordinate of each point inside its interval.
        """
        t, wt = np.polynomial.legendre.leggauss(order)
        loc = 0.5 * (t + 1.0)
        x = self.nodes[:-1, None] + self.h[:, None] * loc[None, :]
        wts = 0.5 * self.h[:, None] * wt[None, :]
        return x, wts, np.broadcast_to(loc, x.shape)


class DiscreteField:
    """Nodal values of a radial function on a mesh, zero at r = 1 and beyond."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh: RadialMesh, values):
        v = np.array(values, dtype=float)
        if v.ndim != 1:
            raise MeshMismatch("field values must be one-dimensional")
        if v.shape[0] == mesh.M:
            v = np.append(v, 0.0)
        elif v.shape[0] != mesh.M + 1:
            raise MeshMismatch(f"expected {mesh.M + 1} values, got {v.shape[0]}")
        v[-1] = 0.0
        v.flags.writeable = False
        self.mesh = mesh
        self.values = v

    @classmethod
    def from_function(cls, mesh: RadialMesh, func) -> "DiscreteField":
        return cls(mesh, func(mesh.nodes))

    @classmethod
    def zeros(cls, mesh: RadialMesh) -> "DiscreteField":
        return cls(mesh, np.zeros(mesh.M + 1))

    @property
    def interior(self) -> np.ndarray:
        return self.values[:-1]

    def with_values(self, values) -> "DiscreteField":
        return DiscreteField(self.mesh, values)

    def __mul__(self, t: float) -> "DiscreteField":
        return DiscreteField(self.mesh, self.values * t)

    __rmul__ = __mul__

    def __add__(self, other: "DiscreteField") -> "DiscreteField":
        check_same_mesh(self.mesh, other.mesh)
        return DiscreteField(self.mesh, self.values + other.values)

    def __sub__(self, other: "DiscreteField") -> "DiscreteField":
        check_same_mesh(self.mesh, other.mesh)
        return DiscreteField(self.mesh, self.values - other.values)

    def __abs__(self) -> "DiscreteField":
        return DiscreteField(self.mesh, np.abs(self.values))

    def __repr__(self):
        return f"DiscreteField(M={self.mesh.M}, max={np.max(np.abs(self.values)):.4g})"

    # serialization -------------------------------------------------------

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# n={self.mesh.n} M={self.mesh.M} grading={self.mesh.grading!r} mesh={self.mesh.digest}\n")
        buf.write("# r u\n")
        for r, u in zip(self.mesh.nodes, self.values):
            buf.write(f"{r:.17g} {u:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "DiscreteField":
        header = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        header[k] = v
                continue
            rows.append([float(x) for x in line.split()])
        data = np.asarray(rows)
        mesh = RadialMesh(int(header["M"]), int(header["n"]), float(header["grading"]))
        if not np.allclose(data[:, 0], mesh.nodes, rtol=0, atol=1e-15):
            raise MeshMismatch("node column does not match the declared mesh")
        return cls(mesh, data[:, 1])

    def save_binary(self, path) -> None:
        np.savez(
            path,
            n=self.mesh.n,
            M=self.mesh.M,
            grading=self.mesh.grading,
            mesh_hash=self.mesh.digest,
            values=self.values,
        )

    @classmethod
    def load_binary(cls, path) -> "DiscreteField":
        with np.load(path, allow_pickle=False) as z:
            mesh = RadialMesh(int(z["M"]), int(z["n"]), float(z["grading"]))
            if str(z["mesh_hash"]) != mesh.digest:
                raise MeshMismatch("stored mesh hash does not match rebuilt mesh")
            return cls(mesh, z["values"])


def check_same_mesh(a: RadialMesh, b: RadialMesh) -> None:
    if not a.same_as(b):
        raise MeshMismatch("fields/tables live on different meshes")
