import numpy as np

from anonbandits.env import Environment


class SpyEnvironment(Environment):
    """Records every grouped block and counts individual-reward reads."""

    def __init__(self, instance, rng):
        super().__init__(instance, rng)
        self.blocks = []  # (assignment, labels)
        self.open_reads = 0
        self.silent_rounds = 0

    def observe(self, arm_of, labels):
        labels = np.atleast_2d(np.asarray(labels))
        self.blocks.append((np.array(arm_of, copy=True), labels.copy()))
        return super().observe(arm_of, labels)

    def play(self, arm_of, rounds):
        self.silent_rounds += rounds
        return super().play(arm_of, rounds)

    def play_open(self, arm_of):
        self.open_reads += 1
        return super().play_open(arm_of)

    def play_round(self, partition):
        self.blocks.append((np.array(partition.assignment), partition.labels()[None, :]))
        return super().play_round(partition)

    def min_group_size(self):
        smallest = np.inf
        for _, labels in self.blocks:
            for row in labels:
                ids, counts = np.unique(row[row >= 0], return_counts=True)
                if counts.size:
                    smallest = min(smallest, counts.min())
        return smallest
