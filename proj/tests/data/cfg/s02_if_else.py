# cfg-nodes: 4
# cfg-edges: 1>2 1>3 2>4 3>4
# cfg-legend: 1 if x>0, 2 return 1, 3 return -1, 4 exit
def sign(x):
    if x > 0:
        return 1
    else:
        return -1
