"""momentforge: generalized (partly circle-valued) moment maps for torus
actions on explicit products of flat tori and spheres."""

__version__ = "0.1.0"
