#!/usr/bin/env python3
"""
Test suite of the potluck package. Run from the project root:

    python -m unittest discover tests

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 13/10/26
"""
