"""Space-time XFEM with Nitsche interface coupling and DG time stepping in 3D.

Modules
-------
geom4d      4D primitives, measures, generalized cross product, normals.
decompose   Simplicial decompositions of prisms, hypertriangles and cut simplices.
quadrature  Rules on intervals, triangles, tetrahedra, pentatopes and prisms.
interface   Piecewise planar space-time interface and phase decomposition.
fem         Space-time basis, enrichment and element forms.
solver      Box meshes, slab assembly, GMRES solves and convergence runs.
testcases   Manufactured moving-plane and moving-sphere problems.
cli         Command-line front end.
"""

__version__ = "0.1.0"
