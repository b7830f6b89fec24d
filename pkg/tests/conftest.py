import hypothesis

# Derandomized so the suite is reproducible run to run.
hypothesis.settings.register_profile(
    "repro", derandomize=True, max_examples=60, deadline=None
)
hypothesis.settings.load_profile("repro")
