# cfg-nodes: 7
# cfg-edges: 1>2 1>3 2>4 3>4 4>5 4>6 5>7 6>7
# cfg-legend: 1 test x<lo, 2 x=lo, 3 x=x, 4 test x>hi, 5 return hi, 6 return x, 7 exit
def clamp(x, lo, hi):
    x = lo if x < lo else x
    return hi if x > hi else x
