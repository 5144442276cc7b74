"""Black-box restart strategies for finding omega-regular violations in Markov chains."""
