import os


def run(cmd):
    if cmd:
        os.system(cmd)
