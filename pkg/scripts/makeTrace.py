#!/usr/bin/env python3

import os
import sys
import argparse

PATH = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(PATH))

from meramCache import WorkloadSpec, genTrace, writeTrace


parser = argparse.ArgumentParser(
    description='write a synthetic L2 access trace in the "R|W <hex-address>" format',
    formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
parser.add_argument('filename', type=str,
                    help='trace file to write')
parser.add_argument('-n', '--n-accesses', type=int, default=100000,
                    help='number of accesses')
parser.add_argument('-w', '--write-fraction', type=float, default=0.3,
                    help='fraction of the accesses that are writes')
parser.add_argument('-f', '--footprint', type=int, default=4*1024*1024,
                    help='footprint in bytes')
parser.add_argument('-l', '--locality', type=float, default=0.9,
                    help='probability of re-using a recently touched line')
parser.add_argument('-s', '--seed', type=int, default=0,
                    help='random seed')
args = parser.parse_args()

spec = WorkloadSpec(name=os.path.basename(args.filename), n_accesses=args.n_accesses,
                    write_fraction=args.write_fraction, footprint=args.footprint,
                    locality=args.locality, seed=args.seed)
writeTrace(genTrace(spec), args.filename, comment=str(spec))
print("Wrote %i accesses to %s" % (spec.n_accesses, args.filename))
