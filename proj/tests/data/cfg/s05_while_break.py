# cfg-nodes: 7
# cfg-edges: 1>2 2>3 2>6 3>4 3>5 4>6 5>2 6>7
# cfg-legend: 1 i=0, 2 while, 3 if, 4 break, 5 i+=1, 6 return, 7 exit
def find(xs, target):
    i = 0
    while i < len(xs):
        if xs[i] == target:
            break
        i += 1
    return i
