"""Uplink localization testbed for reflecting panels with faulty elements.

Subpackages:

* :mod:`risfaultsim.channelgeom` - panel geometry, array responses, channels
* :mod:`risfaultsim.fault`       - element statuses, profiles, sub-arrays
* :mod:`risfaultsim.signal`      - panel/base-station signals and noise
* :mod:`risfaultsim.dataset`     - dataset generation and binary persistence
* :mod:`risfaultsim.estimators`  - classical detection/recovery/fingerprint solvers
* :mod:`risfaultsim.evaluation`  - metrics, sweeps, and result files
* :mod:`risfaultsim.cli`         - the ``risfaultsim`` command
"""

__version__ = "0.1.0"
