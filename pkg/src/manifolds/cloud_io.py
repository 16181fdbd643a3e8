import csv
import math

import numpy as np

from manifolds.cloud import PointCloud
from utils.errors import CloudFormatError
from utils.files import write_csv


def save_cloud(cloud, path):
    """One point per row, no header, shortest exact decimal rendering."""
    write_csv(path, None, (list(map(float, row)) for row in cloud.points))


def load_cloud(path):
    rows = []
    width = None
    with open(path, newline="") as f:
        for index, row in enumerate(csv.reader(f)):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CloudFormatError(f"expected {width} columns, found {len(row)}", row=index)
            try:
                values = [float(cell) for cell in row]
            except ValueError as e:
                raise CloudFormatError(f"unparseable value ({e})", row=index) from None
            if not all(math.isfinite(v) for v in values):
                raise CloudFormatError("non-finite value", row=index)
            rows.append(values)

    if len(rows) < 2:
        raise CloudFormatError(f"fewer than 2 points in {path}")
    return PointCloud(np.array(rows, dtype=np.float64))
