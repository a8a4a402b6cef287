"""textruct: structure free-text clinical notes into indicator tables.

The pipeline goes: ingest -> normalize -> corpus stats -> typo repair ->
phrase merging -> embedding training -> synonym review -> canonicalization ->
rule extraction -> source merging -> evaluation against a gold table.
"""

__version__ = "0.1.0"
