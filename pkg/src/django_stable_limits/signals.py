from django.dispatch import Signal

pre_experiment = Signal()
post_experiment = Signal()
pre_ensemble = Signal()
post_ensemble = Signal()
oracle_evaluated = Signal()
report_written = Signal()
verdict_failed = Signal()
