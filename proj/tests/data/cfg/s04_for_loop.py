# cfg-nodes: 5
# cfg-edges: 1>2 2>3 3>2 2>4 4>5
# cfg-legend: 1 s=0, 2 for, 3 s+=x, 4 return, 5 exit
def total(xs):
    s = 0
    for x in xs:
        s += x
    return s
