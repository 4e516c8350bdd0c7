"""File-format and post-processing stages for qubo_gnn.

``parse``/``write`` handle instance and report files, ``discover`` finds
instance files in a directory and ``postprocess`` turns soft
assignments into feasible bitstrings.
"""
