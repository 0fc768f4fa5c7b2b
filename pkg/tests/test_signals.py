from django_stable_limits import signals


class TestSignals:
    def test_all_signals_exist(self):
        expected = [
            "pre_experiment",
            "post_experiment",
            "pre_ensemble",
            "post_ensemble",
            "oracle_evaluated",
            "report_written",
            "verdict_failed",
        ]
        for name in expected:
            signal = getattr(signals, name)
            assert signal is not None

    def test_signal_can_connect_and_send(self):
        received: list[dict] = []

        def handler(sender, **kwargs):
            received.append(kwargs)

        signals.oracle_evaluated.connect(handler, dispatch_uid="test_signal")
        try:
            signals.oracle_evaluated.send(sender=self.__class__, name="lemma_a3", result=None)
            assert len(received) == 1
            assert received[0]["name"] == "lemma_a3"
        finally:
            signals.oracle_evaluated.disconnect(dispatch_uid="test_signal")
