"""Shared fixtures: lazily built, session-cached solved meshes.

Assembly dominates test runtime, so every mesh is built at most once per
session and shared between the unit suites and the acceptance suite.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

import varcap
from varcap.capacitance import solve_capacitance


@dataclass(frozen=True)
class SolvedMesh:
    name: str
    mesh: "varcap.SurfaceMesh"
    panels: "varcap.PanelSystem"
    system: "varcap.GalerkinSystem"
    solution: "varcap.ChargeSolution"
    build_seconds: float


_MESH_BUILDERS = {
    "sphere1": lambda: varcap.make_icosphere(1.0, 1),
    "sphere2": lambda: varcap.make_icosphere(1.0, 2),
    "sphere3": lambda: varcap.make_icosphere(1.0, 3),
    "sphere4": lambda: varcap.make_icosphere(1.0, 4),
    "cube4": lambda: varcap.make_cube(1.0, 4),
    "cube8": lambda: varcap.make_cube(1.0, 8),
    "cube16": lambda: varcap.make_cube(1.0, 16),
    "ellipsoid": lambda: varcap.make_ellipsoid(2.0, 1.0, 1.0, 2),
}

ALL_MESH_NAMES = tuple(_MESH_BUILDERS)

_cache: dict[str, SolvedMesh] = {}


def get_solved(name: str) -> SolvedMesh:
    if name not in _cache:
        mesh = _MESH_BUILDERS[name]()
        start = time.perf_counter()
        panels = varcap.build_panels(mesh)
        system = varcap.assemble(panels)
        solution = solve_capacitance(system)
        elapsed = time.perf_counter() - start
        _cache[name] = SolvedMesh(name, mesh, panels, system, solution, elapsed)
    return _cache[name]


@pytest.fixture(scope="session")
def solved():
    """Factory fixture: ``solved("sphere2")`` -> cached SolvedMesh."""
    return get_solved
