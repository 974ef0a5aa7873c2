"""stereolab: a desk-scale stereo visuomotor policy laboratory.

Subpackages:
    autodiff  -- dense float64 tensors with tape-based reverse-mode AD
    world     -- synthetic stereo camera rigs, renderer, reach environment
    models    -- encoders, stereo fusion transformer, diffusion policy head
    harness   -- experiment configs, training/eval loops, reports
"""

__version__ = "0.1.0"
