"""End-to-end simulator for perception-aware video semantic communication.

Subpackages and modules:

``channel``       AWGN / Rayleigh block fading, imperfect CSI, equalization.
``entropy``       Gaussian conditional entropy model and checkerboard partition.
``bitstream``     Range coder, hyper-latent coding, PNG rate maps, side-info framing.
``rate_control``  Rate sets, rate matching, masked feature-to-symbol mapping.
``codec``         Deterministic stand-in transforms and decoding branches.
``pipeline``      Per-frame transmit/receive orchestration and GOP sessions.
``metrics``       CBR, PSNR/MSE/L1, rate loss, BD-CBR.
``cli``           Experiment driver (``python -m pvsc``).
"""

__version__ = "0.1.0"
