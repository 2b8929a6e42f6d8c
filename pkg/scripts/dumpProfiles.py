#!/usr/bin/env python3

import os
import sys
import argparse

PATH = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(PATH))

from meramTech import builtinProfiles, loadProfiles, saveProfiles


parser = argparse.ArgumentParser(
    description='write the built-in technology profiles to a profile file that can be edited and passed to meram_sim.py -p',
    formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
parser.add_argument('filename', type=str,
                    help='profile file to write')
parser.add_argument('-t', '--technology', type=str, action='append',
                    help='only write this technology; can be repeated')
args = parser.parse_args()

profiles = builtinProfiles()
if args.technology:
    profiles = [p for p in profiles if p.name in args.technology]
saveProfiles(profiles, args.filename)

# Make sure that what we wrote can be read back
print("Wrote %i profile(s) to %s" % (len(loadProfiles(args.filename)), args.filename))
