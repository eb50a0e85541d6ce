"""Full-size scenario checks of loss-induced two-boson effects."""
