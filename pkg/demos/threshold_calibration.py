"""Walkthrough: turning measured update durations into a threshold.

Each sample is the time from triggering an action to the last of its trace
updates landing on disk, measured across many machines.  The samples are
modeled as a normal distribution and cut off at two standard deviations:
anything within mean + 2*sigma seconds of an observed timestamp counts as
the same execution.
"""

import random

from tracerecon import estimate_threshold, threshold_from_stats

# Published-style survey statistics: browser launches measured on 25 boxes.
print("From survey statistics")
print("----------------------")
for action, mean, sigma in (
    ("Open Internet Explorer 8", 27.4, 16.76),
    ("Open Firefox 3.6", 24.5, 12.96),
):
    theta = threshold_from_stats(mean, sigma, k=2)
    print(f"  {action}: mean {mean} s, sigma {sigma} s -> threshold {theta} s")
print()

# Or from the raw samples themselves.
print("From raw duration samples")
print("-------------------------")
rng = random.Random(1)
samples = [max(0.0, rng.gauss(27.4, 16.76)) for _ in range(25)]
estimate = estimate_threshold(samples, k=2)
print(f"  {estimate.n} samples, mean {estimate.mean:.2f} s, sigma {estimate.sigma:.2f} s")
print(f"  threshold = round(mean + {estimate.k:.0f}*sigma) = {estimate.theta} s")
print()
print("A larger k widens the window (fewer, coarser instances); a smaller k")
print("narrows it and risks splitting one slow execution into two.")
for k in (1.0, 2.0, 3.0):
    print(f"  k={k:.0f}: threshold {estimate_threshold(samples, k=k).theta} s")
