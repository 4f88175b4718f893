"""Geometric primitives from raw measurements.

Builds stereo surfel clouds from disparity images and triangle meshes from
organized LiDAR scans, both with sensor-facing unit normals.  Frames:
disparity-derived points live in the left camera frame (x right, y down,
z forward); scan-derived meshes live in the LiDAR frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

# Depth window for disparity-derived points; beyond this, disparity
# quantization makes stereo depth unusable.
DEPTH_MIN = 0.5
DEPTH_MAX = 80.0

# Range-image triangulation defaults: suppress sliver triangles across
# occlusion boundaries.
MAX_EDGE = 1.0
MAX_RANGE_JUMP = 0.5
AREA_MIN = 1e-6

STRIDE_DEFAULT = 4

# Surfels whose k-NN scatter is closer to a ball than a disc carry no
# usable normal.
EIGRATIO_UNRELIABLE = 0.5


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model of a rectified stereo pair (pixels and meters)."""

    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0 and self.baseline > 0):
            raise ValueError("fx, fy and baseline must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


class DisparityImage:
    """Per-pixel disparity in pixels; values <= 0 mark invalid pixels."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("disparity must be a 2D array")
        self.values = values
        self.height, self.width = values.shape

    def valid_mask(self) -> np.ndarray:
        v = self.values
        return (v > 0.0) & (v < self.width) & np.isfinite(v)


class OrganizedScan:
    """LiDAR returns on a beam-row x azimuth-column grid.

    ``ranges`` holds meters with 0 marking a miss; ``directions`` holds the
    unit beam direction per cell in the LiDAR frame.
    """

    def __init__(self, ranges, directions):
        ranges = np.asarray(ranges, dtype=np.float64)
        directions = np.asarray(directions, dtype=np.float64)
        if ranges.ndim != 2 or directions.shape != ranges.shape + (3,):
            raise ValueError("ranges must be (R, C), directions (R, C, 3)")
        norms = np.linalg.norm(directions, axis=2)
        valid = ranges > 0.0
        if np.any(np.abs(norms[valid] - 1.0) > 1e-6):
            raise ValueError("beam directions must be unit norm within 1e-6")
        self.ranges = ranges
        self.directions = directions
        self.rows, self.cols = ranges.shape

    def valid_mask(self) -> np.ndarray:
        return self.ranges > 0.0

    def points(self) -> np.ndarray:
        """(R, C, 3) Cartesian points; invalid cells hold zeros."""
        return self.ranges[..., None] * self.directions


class TriangleMesh:
    """Vertex/face set with per-face unit normals and centroids.

    Normals are oriented toward the sensor origin (n . centroid < 0).
    """

    def __init__(self, vertices, faces, face_normals=None, face_centroids=None):
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if face_centroids is None or face_normals is None:
            n, c = _face_geometry(self.vertices, self.faces)
            face_normals = n if face_normals is None else face_normals
            face_centroids = c if face_centroids is None else face_centroids
        self.face_normals = np.asarray(face_normals, dtype=np.float64).reshape(-1, 3)
        self.face_centroids = np.asarray(face_centroids, dtype=np.float64).reshape(-1, 3)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_empty(self) -> bool:
        return self.n_faces == 0

    def face_vertices(self) -> np.ndarray:
        """(F, 3, 3) vertex coordinates per face."""
        return self.vertices[self.faces]

    def validate(self, area_min: float = AREA_MIN) -> None:
        """Raise if any face violates the mesh invariants."""
        if np.any(self.faces < 0) or np.any(self.faces >= len(self.vertices)):
            raise ValueError("face index out of range")
        tri = self.face_vertices()
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        area = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(area <= area_min):
            raise ValueError("degenerate face (area below minimum)")
        centroid = tri.mean(axis=1)
        if np.abs(centroid - self.face_centroids).max() > 1e-9:
            raise ValueError("centroid differs from vertex mean")
        norms = np.linalg.norm(self.face_normals, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("face normal not unit")
        facing = np.einsum("ij,ij->i", self.face_normals, self.face_centroids)
        if np.any(facing >= 0.0):
            raise ValueError("face normal not oriented toward the sensor")


def _face_geometry(vertices, faces):
    tri = vertices[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    norms = np.linalg.norm(normals, axis=1)
    norms[norms == 0.0] = 1.0
    normals /= norms[:, None]
    centroids = tri.mean(axis=1)
    # Sensor-facing orientation.
    flip = np.einsum("ij,ij->i", normals, centroids) > 0.0
    normals[flip] *= -1.0
    return normals, centroids


class SurfelCloud:
    """Stereo-derived points with optional estimated normals.

    ``reliable`` flags surfels whose normal is trustworthy; unreliable ones
    are skipped during association.  ``meta`` carries preprocessing
    diagnostics such as the empty-input flag.
    """

    def __init__(
        self,
        points,
        normals=None,
        source_pixel=None,
        source_disparity=None,
        reliable=None,
        meta=None,
    ):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        n = len(self.points)
        self.normals = None if normals is None else np.asarray(normals, dtype=np.float64).reshape(n, 3)
        self.source_pixel = (
            None if source_pixel is None else np.asarray(source_pixel, dtype=np.float64).reshape(n, 2)
        )
        self.source_disparity = (
            None if source_disparity is None else np.asarray(source_disparity, dtype=np.float64).reshape(n)
        )
        self.reliable = (
            np.ones(n, dtype=bool) if reliable is None else np.asarray(reliable, dtype=bool).reshape(n)
        )
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


def disparity_to_points(
    d: DisparityImage,
    k: CameraIntrinsics,
    stride: int = STRIDE_DEFAULT,
    depth_min: float = DEPTH_MIN,
    depth_max: float = DEPTH_MAX,
) -> SurfelCloud:
    """Back-project a disparity image to a surfel cloud (normals unset).

    Samples the pixel grid at the given stride; Z = fx * baseline / disp,
    X = (u - cx) Z / fx, Y = (v - cy) Z / fy.  Points outside the
    [depth_min, depth_max] window are dropped.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    vs, us = np.mgrid[0 : d.height : stride, 0 : d.width : stride]
    disp = d.values[vs, us]
    valid = (disp > 0.0) & (disp < d.width) & np.isfinite(disp)
    if not np.any(valid):
        return SurfelCloud(np.zeros((0, 3)), meta={"empty_input": True})
    us, vs, disp = us[valid], vs[valid], disp[valid]
    z = k.fx * k.baseline / disp
    keep = (z >= depth_min) & (z <= depth_max)
    us, vs, disp, z = us[keep], vs[keep], disp[keep], z[keep]
    x = (us - k.cx) * z / k.fx
    y = (vs - k.cy) * z / k.fy
    points = np.column_stack([x, y, z])
    return SurfelCloud(
        points,
        source_pixel=np.column_stack([us, vs]).astype(np.float64),
        source_disparity=disp,
        meta={"empty_input": False, "n_depth_dropped": int(np.sum(~keep))},
    )


def project_to_disparity(points, k: CameraIntrinsics) -> np.ndarray:
    """(u, v, disparity) of left-camera-frame points; inverse of the back-projection."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    u = k.fx * p[:, 0] / p[:, 2] + k.cx
    v = k.fy * p[:, 1] / p[:, 2] + k.cy
    disp = k.fx * k.baseline / p[:, 2]
    return np.column_stack([u, v, disp])


def disparity_point_jacobian(source_pixel, source_disparity, k: CameraIntrinsics) -> np.ndarray:
    """d(point)/d(disparity) of the back-projection at given source pixels, (N, 3).

    With Z = fx b / disp the whole point scales as 1/disp, so the derivative
    is -point / disp.
    """
    px = np.asarray(source_pixel, dtype=np.float64).reshape(-1, 2)
    disp = np.asarray(source_disparity, dtype=np.float64).reshape(-1)
    z = k.fx * k.baseline / disp
    pts = np.column_stack([(px[:, 0] - k.cx) * z / k.fx, (px[:, 1] - k.cy) * z / k.fy, z])
    return -pts / disp[:, None]


def reconstruct_mesh(
    scan: OrganizedScan,
    max_edge: float = MAX_EDGE,
    max_range_jump: float = MAX_RANGE_JUMP,
    area_min: float = AREA_MIN,
) -> TriangleMesh:
    """Range-image triangulation of an organized scan.

    Each 2x2 cell of valid neighbors whose pairwise range differences stay
    below ``max_range_jump`` and whose edges stay below ``max_edge`` emits
    two triangles.  Normals are oriented toward the sensor origin.
    """
    if scan.rows < 2 or scan.cols < 2:
        raise ValueError("scan must be at least 2x2")
    pts = scan.points()
    valid = scan.valid_mask()
    r = scan.ranges

    # 2x2 cell corners: a=(i,j) b=(i,j+1) c=(i+1,j) d=(i+1,j+1)
    a = pts[:-1, :-1]
    b = pts[:-1, 1:]
    c = pts[1:, :-1]
    d = pts[1:, 1:]
    va = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, :-1] & valid[1:, 1:]

    ra, rb, rc, rd = r[:-1, :-1], r[:-1, 1:], r[1:, :-1], r[1:, 1:]
    stacked = np.stack([ra, rb, rc, rd])
    jump = stacked.max(axis=0) - stacked.min(axis=0)
    ok = va & (jump < max_range_jump)

    def edge_len(p, q):
        return np.linalg.norm(p - q, axis=-1)

    edges = np.stack(
        [edge_len(a, b), edge_len(a, c), edge_len(b, d), edge_len(c, d), edge_len(b, c)]
    )
    ok &= edges.max(axis=0) < max_edge

    ii, jj = np.nonzero(ok)
    if len(ii) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    idx = np.arange(scan.rows * scan.cols).reshape(scan.rows, scan.cols)
    ia = idx[ii, jj]
    ib = idx[ii, jj + 1]
    ic = idx[ii + 1, jj]
    id_ = idx[ii + 1, jj + 1]
    tri1 = np.column_stack([ia, ib, ic])
    tri2 = np.column_stack([ib, id_, ic])
    faces = np.concatenate([tri1, tri2])

    flat = pts.reshape(-1, 3)
    tri = flat[faces]
    area = 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
    )
    faces = faces[area > area_min]
    if len(faces) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    # Keep only referenced vertices.
    used, inverse = np.unique(faces, return_inverse=True)
    vertices = flat[used]
    faces = inverse.reshape(-1, 3)
    return TriangleMesh(vertices, faces)


def estimate_point_normals(
    cloud: SurfelCloud,
    k_neighbors: int = 12,
    eig_ratio_max: float = EIGRATIO_UNRELIABLE,
) -> SurfelCloud:
    """Per-point normals from the k-NN scatter matrix.

    The normal is the eigenvector of the smallest eigenvalue, sign-flipped
    toward the sensor origin.  Points whose smallest/middle eigenvalue
    ratio exceeds ``eig_ratio_max`` are flagged unreliable and skipped by
    the association stage.
    """
    if k_neighbors < 5:
        raise ValueError("k_neighbors must be >= 5")
    if len(cloud) < k_neighbors:
        raise ValueError("cloud smaller than k_neighbors")
    tree = cKDTree(cloud.points)
    _, idx = tree.query(cloud.points, k=k_neighbors)
    neigh = cloud.points[idx]  # (N, k, 3)
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    scatter = np.einsum("nki,nkj->nij", centered, centered)
    eigval, eigvec = np.linalg.eigh(scatter)  # ascending
    normals = eigvec[:, :, 0]
    # Sensor-facing: n . p < 0.
    flip = np.einsum("ij,ij->i", normals, cloud.points) > 0.0
    normals[flip] *= -1.0
    mid = np.maximum(eigval[:, 1], 1e-300)
    reliable = (eigval[:, 0] / mid) <= eig_ratio_max
    return SurfelCloud(
        cloud.points,
        normals=normals,
        source_pixel=cloud.source_pixel,
        source_disparity=cloud.source_disparity,
        reliable=reliable,
        meta=dict(cloud.meta, n_unreliable=int(np.sum(~reliable))),
    )
