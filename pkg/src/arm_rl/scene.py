"""Virtual monitor, target dynamics and a pinhole camera that renders the arm's view.

The world contains a single vertical wall plane.  The monitor is a rectangle on
that plane, the target is a disc drawn on the monitor, and clutter shapes sit
on the wall around it.  Rays that miss the wall see the room colour.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .kinematics import Pose

MONITOR_RESOLUTION = (1920, 1200)
FRAME_SIZE = (400, 300)

# label values of the intermediate label image
ROOM, WALL, MONITOR, TARGET = 0, 1, 2, 3
_FIRST_CLUTTER = 4


class TargetMode(enum.Enum):
    STATIC = "static"
    RANDOM_RESET = "random_reset"
    TRACKER = "tracker"


@dataclass(frozen=True)
class MonitorModel:
    """Monitor rectangle in the base frame.

    ``pose.position`` is the world point of monitor pixel ``(960, 600)``.  The
    orientation columns are the monitor's pixel-x direction, pixel-y direction
    and the screen normal pointing away from the viewer.
    """

    pose: Pose
    resolution: tuple[int, int] = MONITOR_RESOLUTION
    pixel_pitch: float = 0.00027
    background: tuple[int, int, int] = (255, 255, 255)

    def __post_init__(self):
        if tuple(self.resolution) != MONITOR_RESOLUTION:
            raise ValueError("monitor resolution is fixed at 1920x1200")
        if not self.pixel_pitch > 0:
            raise ValueError("pixel_pitch must be positive")

    @property
    def center_px(self) -> tuple[float, float]:
        return self.resolution[0] / 2, self.resolution[1] / 2

    def pixel_to_world(self, px, py) -> np.ndarray:
        cx, cy = self.center_px
        R = self.pose.orientation
        return (
            self.pose.position
            + (px - cx) * self.pixel_pitch * R[:, 0]
            + (py - cy) * self.pixel_pitch * R[:, 1]
        )


def default_monitor(distance: float = 0.70, center_yz=(0.174, 0.475)) -> MonitorModel:
    """Vertical monitor ``distance`` metres along +x from the base, facing the robot."""
    # screen x runs toward -y (viewer's right), screen y runs down, z points into the screen
    R = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    return MonitorModel(Pose(np.array([distance, center_yz[0], center_yz[1]]), R))


@dataclass(frozen=True)
class TargetState:
    center: tuple[int, int]
    radius_px: float = 60.0
    drift: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class CameraModel:
    focal_px: float = 400.0
    principal_point: tuple[float, float] = (200.0, 150.0)
    resolution: tuple[int, int] = FRAME_SIZE
    # camera sits 5 cm ahead of the flange looking along the tool z axis
    mount: Pose = field(default_factory=lambda: Pose(np.array([0.0, 0.0, 0.05]), np.eye(3)))

    def __post_init__(self):
        if tuple(self.resolution) != FRAME_SIZE:
            raise ValueError("camera resolution is fixed at 400x300")
        if not self.focal_px > 0:
            raise ValueError("focal_px must be positive")

    def pose_from_flange(self, flange: Pose) -> Pose:
        return flange.compose(self.mount)


@dataclass(frozen=True)
class ClutterShape:
    """A flat shape on the wall, in metres relative to the monitor centre along the
    monitor's x/y axes.  ``size`` is a radius for circles and ``(w, h)`` for rectangles."""

    kind: str
    center: tuple[float, float]
    size: float | tuple[float, float]
    color: tuple[int, int, int]


DEFAULT_CLUTTER = (
    ClutterShape("circle", (-0.42, -0.02), 0.05, (110, 110, 110)),
    ClutterShape("rect", (0.40, -0.08), (0.12, 0.10), (235, 90, 40)),
    ClutterShape("rect", (0.40, 0.17), (0.20, 0.10), (40, 70, 190)),
)


@dataclass(frozen=True)
class SceneConfig:
    lighting_scale_range: tuple[float, float] = (0.85, 1.0)
    clutter: tuple[ClutterShape, ...] = DEFAULT_CLUTTER
    noise_std: float = 2.0
    wall_color: tuple[int, int, int] = (150, 150, 150)
    room_color: tuple[int, int, int] = (90, 90, 90)
    target_color: tuple[int, int, int] = (255, 20, 20)

    def __post_init__(self):
        lo, hi = self.lighting_scale_range
        if not (0 < lo <= hi <= 1):
            raise ValueError("lighting_scale_range must satisfy 0 < lo <= hi <= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    def sample_lighting(self, rng: np.random.Generator) -> float:
        lo, hi = self.lighting_scale_range
        return float(rng.uniform(lo, hi))


# --------------------------------------------------------------------------- target

def reset_target(
    mode: TargetMode, rng: np.random.Generator, radius_px: float = 60.0, margin: int = 100
) -> TargetState:
    mode = TargetMode(mode)
    w, h = MONITOR_RESOLUTION
    if mode is TargetMode.STATIC:
        return TargetState((w // 2, h // 2), radius_px, (0, 0))
    if mode is TargetMode.RANDOM_RESET:
        x = int(rng.integers(margin, w - 1 - margin, endpoint=True))
        y = int(rng.integers(margin, h - 1 - margin, endpoint=True))
        return TargetState((x, y), radius_px, (0, 0))
    directions = ((3, 0), (-3, 0), (0, 3), (0, -3))
    return TargetState((w // 2, h // 2), radius_px, directions[int(rng.integers(4))])


def drift_target(t: TargetState) -> TargetState:
    """Advance the target one step, reflecting off the monitor edges.

    An axis whose next position would leave the screen has its drift negated
    before the move is applied.
    """
    limits = (MONITOR_RESOLUTION[0] - 1, MONITOR_RESOLUTION[1] - 1)
    center, drift = list(t.center), list(t.drift)
    for axis in (0, 1):
        nxt = center[axis] + drift[axis]
        if nxt < 0 or nxt > limits[axis]:
            drift[axis] = -drift[axis]
        center[axis] += drift[axis]
    return replace(t, center=(center[0], center[1]), drift=(drift[0], drift[1]))


# --------------------------------------------------------------------------- camera

def project_point(cam: CameraModel, cam_pose: Pose, p_world) -> tuple[float, float, float] | None:
    """Pinhole projection ``(u, v, depth)`` of a world point, or None if behind the camera."""
    p_cam = cam_pose.orientation.T @ (np.asarray(p_world, dtype=float) - cam_pose.position)
    depth = p_cam[2]
    if depth <= 0:
        return None
    cx, cy = cam.principal_point
    return cam.focal_px * p_cam[0] / depth + cx, cam.focal_px * p_cam[1] / depth + cy, float(depth)


@numba.njit(cache=True, boundscheck=False, fastmath=True)
def _label_kernel(w, h, cx, cy, f, k, px, py, num, mon_w, mon_h, clutter, target, out):
    half_w = mon_w / 2
    half_h = mon_h / 2
    mid_w = (mon_w - 1) / 2
    mid_h = (mon_h - 1) / 2
    tx, ty, r2 = target[0], target[1], target[2] * target[2]
    k0, px0, py0 = k[0] / f, px[0] / f, py[0] / f
    n_clutter = clutter.shape[0]
    for v in range(h):
        yv = (v - cy) / f
        # per-row affine terms in u: value = a + b * (u - cx)
        d0 = k[1] * yv + k[2]
        x0 = px[1] * yv + px[2]
        y0 = py[1] * yv + py[2]
        for u in range(w):
            du = u - cx
            den = k0 * du + d0
            if den * num <= 0.0:
                out[v, u] = ROOM
                continue
            inv = 1.0 / den
            mx = (px0 * du + x0) * inv
            my = (py0 * du + y0) * inv
            if abs(mx - mid_w) <= half_w and abs(my - mid_h) <= half_h:
                dx = mx - tx
                dy = my - ty
                out[v, u] = TARGET if dx * dx + dy * dy <= r2 else MONITOR
                continue
            lab = WALL
            for i in range(n_clutter):
                # rows: (centre x, centre y, half width, half height, radius^2 or -1)
                dx = mx - clutter[i, 0]
                if abs(dx) > clutter[i, 2]:
                    continue
                dy = my - clutter[i, 1]
                if abs(dy) > clutter[i, 3]:
                    continue
                if clutter[i, 4] < 0 or dx * dx + dy * dy <= clutter[i, 4]:
                    lab = _FIRST_CLUTTER + i
            out[v, u] = lab


@numba.njit(cache=True, boundscheck=False)
def _colour_kernel(labels, lut, noise, out):
    n = labels.size
    for i in range(n):
        lab = labels[i]
        for c in range(3):
            val = lut[lab * 3 + c] + noise[i * 3 + c]
            out[i * 3 + c] = min(max(val, 0), 255)


def render_labels(
    cam: CameraModel, cam_pose: Pose, monitor: MonitorModel, target: TargetState, scene: SceneConfig
) -> np.ndarray:
    """Label image (H, W) of uint8 region ids: room, wall, monitor, target or clutter."""
    R_mon = monitor.pose.orientation
    x_axis, y_axis, normal = R_mon[:, 0], R_mon[:, 1], R_mon[:, 2]
    Rc = cam_pose.orientation
    offset = cam_pose.position - monitor.pose.position
    pitch = monitor.pixel_pitch
    mcx, mcy = monitor.center_px

    # A pixel ray c + t * Rc d meets the wall at t = num / (k . d).  The hit point in
    # monitor pixels is a ratio of two affine functions of the ray direction d.
    k = Rc.T @ normal
    num = float(-normal @ offset)
    px = (x_axis @ offset / pitch + mcx) * k + (num / pitch) * (Rc.T @ x_axis)
    py = (y_axis @ offset / pitch + mcy) * k + (num / pitch) * (Rc.T @ y_axis)

    clutter = np.zeros((len(scene.clutter), 5))
    for i, shape in enumerate(scene.clutter):
        sx = shape.center[0] / pitch + mcx
        sy = shape.center[1] / pitch + mcy
        if shape.kind == "circle":
            r = shape.size / pitch
            clutter[i] = (sx, sy, r, r, r * r)
        elif shape.kind == "rect":
            clutter[i] = (sx, sy, shape.size[0] / pitch / 2, shape.size[1] / pitch / 2, -1.0)
        else:
            raise ValueError(f"unknown clutter kind {shape.kind!r}")

    w, h = cam.resolution
    out = np.empty((h, w), dtype=np.uint8)
    target_arr = np.array([target.center[0], target.center[1], target.radius_px], dtype=float)
    _label_kernel(
        w, h, float(cam.principal_point[0]), float(cam.principal_point[1]), float(cam.focal_px),
        k, px, py, num, float(monitor.resolution[0]), float(monitor.resolution[1]),
        clutter, target_arr, out,
    )
    return out


def palette(scene: SceneConfig, monitor: MonitorModel) -> np.ndarray:
    colors = [scene.room_color, scene.wall_color, monitor.background, scene.target_color]
    colors += [shape.color for shape in scene.clutter]
    return np.array(colors, dtype=float)


_NOISE_BANKS: dict = {}


def _noise_bank(std: float, size: int) -> np.ndarray:
    # A fixed pool of rounded Gaussian samples; each render reads a window at a
    # random offset, which is far cheaper than drawing fresh normals per frame.
    key = (std, size)
    bank = _NOISE_BANKS.get(key)
    if bank is None:
        pool_rng = np.random.default_rng(0x5EED)
        bank = np.rint(pool_rng.normal(0.0, std, 4 * size)).astype(np.int16)
        _NOISE_BANKS[key] = bank
    return bank


def render(
    cam: CameraModel,
    cam_pose: Pose,
    monitor: MonitorModel,
    target: TargetState,
    scene: SceneConfig,
    rng: np.random.Generator | None = None,
    lighting: float = 1.0,
) -> np.ndarray:
    """Render the camera view as an (H, W, 3) uint8 RGB image.

    Colours are scaled by ``lighting`` and rounded, then integer pixel noise
    drawn via ``rng`` is added.  Without an rng (or with ``noise_std == 0``)
    the image is noise free.
    """
    labels = render_labels(cam, cam_pose, monitor, target, scene)
    lut = np.rint(palette(scene, monitor) * lighting).astype(np.int32)
    h, w = labels.shape
    if rng is not None and scene.noise_std > 0:
        bank = _noise_bank(scene.noise_std, h * w * 3)
        start = int(rng.integers(0, bank.size - h * w * 3))
        noise = bank[start : start + h * w * 3]
    else:
        noise = np.zeros(h * w * 3, dtype=np.int16)
    img = np.empty((h, w, 3), dtype=np.uint8)
    _colour_kernel(labels.reshape(-1), lut.reshape(-1), noise.reshape(-1), img.reshape(-1))
    return img


def apparent_radius(cam: CameraModel, monitor: MonitorModel, target: TargetState, depth: float) -> float:
    """Image radius in pixels of the target seen head-on from ``depth`` metres."""
    return cam.focal_px * target.radius_px * monitor.pixel_pitch / depth
