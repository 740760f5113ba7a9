"""Ascii PLY export of detection output for quick visual inspection."""
from __future__ import annotations

import numpy as np


def _write_ply(path, vertices, faces=None, edges=None):
    lines = ["ply", "format ascii 1.0",
             f"element vertex {len(vertices)}",
             "property float x", "property float y", "property float z"]
    if faces is not None:
        lines += [f"element face {len(faces)}",
                  "property list uchar int vertex_indices"]
    if edges is not None:
        lines += [f"element edge {len(edges)}",
                  "property int vertex1", "property int vertex2"]
    lines.append("end_header")
    for v in vertices:
        lines.append(f"{v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
    if faces is not None:
        for f in faces:
            lines.append("3 " + " ".join(str(int(i)) for i in f))
    if edges is not None:
        for a, b in edges:
            lines.append(f"{int(a)} {int(b)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def save_line_ply(path, lines) -> None:
    """Write line segments as PLY edge elements."""
    vertices = []
    edges = []
    for seg in lines:
        edges.append((len(vertices), len(vertices) + 1))
        vertices.append(seg.p_s)
        vertices.append(seg.p_e)
    _write_ply(path, vertices, edges=edges)


_BOX_FACES = [(0, 1, 2), (0, 2, 3), (4, 6, 5), (4, 7, 6),
              (0, 4, 5), (0, 5, 1), (1, 5, 6), (1, 6, 2),
              (2, 6, 7), (2, 7, 3), (3, 7, 4), (3, 4, 0)]


def save_marker_ply(path, staircases) -> None:
    """Write one solid box per detected stair, sized w × d × h.

    Each box hangs below its stair line and extends towards the next stair,
    so the mesh loosely reconstructs the staircase body.
    """
    vertices = []
    faces = []
    for stair in staircases:
        model = stair.model
        steps = stair.stairs
        for i, line in enumerate(steps):
            if len(steps) >= 2:
                if i + 1 < len(steps):
                    fwd = steps[i + 1].midpoint[:2] - line.midpoint[:2]
                else:
                    fwd = line.midpoint[:2] - steps[i - 1].midpoint[:2]
            else:
                fwd = np.array([1.0, 0.0])
            norm = np.hypot(*fwd)
            fwd = fwd / norm if norm > 0 else np.array([1.0, 0.0])
            u = line.p_e[:2] - line.p_s[:2]
            un = np.hypot(*u)
            u = u / un if un > 0 else np.array([-fwd[1], fwd[0]])
            center = line.midpoint + np.array(
                [fwd[0] * model.d / 2, fwd[1] * model.d / 2, -model.h / 2])
            base = len(vertices)
            for dz in (-0.5, 0.5):
                ring = ((-1, -1), (1, -1), (1, 1), (-1, 1))
                for su, sv in ring:
                    offset = (su * model.w / 2 * u + sv * model.d / 2 * fwd)
                    vertices.append(center + np.array(
                        [offset[0], offset[1], dz * model.h]))
            faces += [tuple(base + k for k in f) for f in _BOX_FACES]
    _write_ply(path, vertices, faces=faces)
