"""gaborheat: wave-packet analysis of (possibly degenerate) parabolic evolutions.

Core pipeline: build the linear propagator of
u_t + (diffusion)^w u + i (drift)^w u = 0 on a periodic box, check its
energy estimates and Gabor-matrix off-diagonal decay, extract its Weyl
symbol, solve semilinear problems by Duhamel-Picard iteration in
modulation norms, and estimate global wave front sets from STFT decay.

Submodules: grid, tfa, symbols, weyl, propagator, semilinear, wavefront,
io, cli.
"""

__version__ = "0.1.0"
