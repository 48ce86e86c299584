"""Maximum throughput of ultrawideband (O- to U-band) WDM links.

The pipeline: a wavelength-dependent fibre profile, a channel plan, the
inter-channel stimulated Raman scattering power evolution, GN-model
nonlinear interference coefficients, a per-channel noise budget and a
segment-parameterised launch-power optimiser.
"""

__version__ = "0.1.0"
