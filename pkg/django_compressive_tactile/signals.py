"""
Signals emitted by the sampling, reconstruction, training and classification pipelines.

Signals:
    frame_sampled: Fired after one MeasurementSet has been acquired.
        - sender: MeasurementSet class
        - measurement_set: The acquired MeasurementSet

    frame_reconstructed: Fired after a full frame has been estimated.
        - sender: TactileFrame class
        - frame: The reconstructed TactileFrame
        - method: "dictionary" or "interpolation"

    training_iteration: Fired after each K-SVD iteration.
        - sender: Dictionary class
        - iteration: Iteration index (0-based)
        - mean_residual: Mean squared patch residual after the sparse-coding stage
        - atoms_replaced: Number of unused atoms re-seeded during the update stage

    frame_classified: Fired after a MeasurementSet has been classified.
        - sender: SrcLibrary class
        - result: The SrcResult

Example:
    Writing a training log::

        from django.dispatch import receiver
        from django_compressive_tactile.signals import training_iteration

        @receiver(training_iteration)
        def log_iteration(sender, iteration, mean_residual, atoms_replaced, **kwargs):
            print(iteration, mean_residual, atoms_replaced)
"""
import django.dispatch

frame_sampled = django.dispatch.Signal()
"""Signal fired after a frame has been sampled. Provides: measurement_set."""

frame_reconstructed = django.dispatch.Signal()
"""Signal fired after a frame has been reconstructed. Provides: frame, method."""

training_iteration = django.dispatch.Signal()
"""Signal fired after each K-SVD iteration. Provides: iteration, mean_residual, atoms_replaced."""

frame_classified = django.dispatch.Signal()
"""Signal fired after SRC classification. Provides: result."""
