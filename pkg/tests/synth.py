"""Synthetic frames for vision tests: a red disc on a light background, and
clutter-only scenes built from shapes the detector must ignore.  Clutter circles
never use a colour that passes the red mask; rectangles may."""

import numpy as np

from arm_rl.vision import draw_disc

H, W = 300, 400
TARGET_RGB = (240, 30, 30)
CLUTTER_COLOURS = (
    (110, 110, 110),  # grey
    (235, 90, 40),  # orange
    (40, 70, 190),  # blue
    (250, 40, 40),  # red
    (60, 200, 60),  # green
)


def disc_frame(center, radius, background=255, lighting=1.0, rng=None, noise_std=2.0, colour=TARGET_RGB):
    img = np.full((H, W, 3), float(background))
    img[draw_disc((H, W), center, radius)] = colour
    return finish(img, lighting, rng, noise_std)


def finish(img, lighting=1.0, rng=None, noise_std=2.0):
    img = np.rint(img * lighting)
    if rng is not None and noise_std > 0:
        img = img + np.rint(rng.normal(0.0, noise_std, img.shape))
    return np.clip(img, 0, 255).astype(np.uint8)


def random_disc(rng):
    r = rng.uniform(12, 38)
    return (rng.uniform(r, W - 1 - r), rng.uniform(r, H - 1 - r)), r


def clutter_frame(rng, lighting=1.0):
    img = np.full((H, W, 3), float(rng.choice([150, 255])))
    yy, xx = np.mgrid[0:H, 0:W]
    for _ in range(rng.integers(2, 6)):
        colour = CLUTTER_COLOURS[rng.integers(len(CLUTTER_COLOURS))]
        if rng.random() < 0.4:
            cx, cy, r = rng.uniform(0, W), rng.uniform(0, H), rng.uniform(8, 45)
            if colour[0] >= 200 and max(colour[1:]) < 200:
                colour = (110, 110, 110)  # a circle that survives the red mask is a target
            img[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = colour
        else:
            cx, cy = rng.uniform(0, W), rng.uniform(0, H)
            w, h = rng.uniform(10, 120), rng.uniform(10, 120)
            img[(abs(xx - cx) <= w / 2) & (abs(yy - cy) <= h / 2)] = colour
    return finish(img, lighting, rng)


def detection_ok(det, center, radius, center_tol=3.0, radius_tol=2.0):
    if det is None:
        return False
    err = np.hypot(det.center[0] - center[0], det.center[1] - center[1])
    return err <= center_tol and abs(det.radius - radius) <= radius_tol
