"""Offline figure generation from petgov trajectory CSVs.

Four batch scripts, one per figure kind, each taking ``--csv`` and
``--out`` (plus an optional ``--meta`` sidecar path):

* ``petgov-plot-trajectory3d``: body-axis path on the unit sphere with the
  forbidden cone and the goal direction;
* ``petgov-plot-errors``: attitude and reference error functions on a log
  axis;
* ``petgov-plot-lyapunov``: energy against the safety thresholds, with the
  sample-and-hold trigger intervals shaded;
* ``petgov-plot-torque``: torque components and norm against the
  saturation limit.

The scripts are read-only over their inputs and produce PNG files; no
interactive display is involved.
"""

__version__ = "0.1.0"
