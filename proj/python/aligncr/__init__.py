"""Align-Consistency lab: python surface over the C++ core."""

from aligncr._core import (  # noqa: F401
    ErrorRateReport,
    collapse,
    cr_loss,
    ctc_log_likelihood,
    ctc_loss_and_grad,
    decode_corpus,
    edit_distance,
    generate_corpus,
    greedy_decode,
    inverse_enumerate,
)
