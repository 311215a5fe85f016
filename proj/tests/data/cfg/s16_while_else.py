# cfg-nodes: 10
# cfg-edges: 1>2 2>3 2>10 3>4 4>5 4>8 5>6 5>7 6>9 7>4 8>10 9>2
# cfg-legend: 1 k=n+1, 2 while True, 3 d=2, 4 while d*d<=k, 5 if divides, 6 break,
# cfg-legend: 7 d+=1, 8 else return k, 9 k+=1, 10 exit
def first_prime_after(n):
    k = n + 1
    while True:
        d = 2
        while d * d <= k:
            if k % d == 0:
                break
            d += 1
        else:
            return k
        k += 1
