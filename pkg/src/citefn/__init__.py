"""citefn: classify how publications use cited genomic datasets, and score
machine outputs against gold annotations."""

__version__ = "0.1.0"
