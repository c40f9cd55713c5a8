"""Matrix-free p-Laplacian finite elements with automatic differentiation at
the quadrature-point level."""
from .basis import build_basis
from .mesh import build_cube_tet_mesh
from .qfunction import PLaplacianParams
from .solver import newton_solve
from .space import build_space

__version__ = "0.1.0"
