"""Learned pipelines over risfaultsim dataset files.

Three pipelines, all reading the binary dataset format and writing
prediction files in the documented results schema (the only two surfaces
shared with the simulator package):

* two-phase fault detector - sub-array screening, then per-element
  classification inside flagged sub-arrays
* dual-stage localizer - masked CNN recovery plus VAE restoration of the
  panel signal, then coordinate regression on the reconstruction
* direct localizer - coordinate regression straight from the receiver signal
"""

__version__ = "0.1.0"
