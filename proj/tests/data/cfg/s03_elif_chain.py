# cfg-nodes: 9
# cfg-edges: 1>2 1>3 2>8 3>4 3>5 4>8 5>6 5>7 6>8 7>8 8>9
# cfg-legend: 1 if >=90, 2 g=A, 3 elif >=80, 4 g=B, 5 elif >=70, 6 g=C, 7 g=F, 8 return, 9 exit
def grade(score):
    if score >= 90:
        g = "A"
    elif score >= 80:
        g = "B"
    elif score >= 70:
        g = "C"
    else:
        g = "F"
    return g
