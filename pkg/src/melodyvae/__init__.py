"""Pitch/rhythm-disentangled conditional sequence VAE for 8-beat melodies.

Subpackages cover the differentiable-computation engine (``autodiff``),
token sequences and symbolic transforms (``sequences``), corpus handling and
synthesis (``corpus``), the model itself (``model``), optimization and
checkpointing (``training``), disentanglement measurements (``metrics``),
latent-space analogies (``analogy``), and a minimal MIDI writer (``midi``).
The ``melodyvae`` console command in ``cli`` ties the pipeline together.
"""

__version__ = "0.1.0"
