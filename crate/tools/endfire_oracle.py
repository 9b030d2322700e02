import mpmath as mp
mp.mp.dps=60
def C(N,d,gl=0):
    M=mp.matrix(N,N)
    for i in range(N):
        for j in range(N):
            if i==j: M[i,j]=1+gl
            else:
                u=2*mp.pi*d*abs(i-j); M[i,j]=mp.sin(u)/u
    return M
def a(N,d,al): return mp.matrix([mp.exp(-1j*n*2*mp.pi*d*mp.cos(al)) for n in range(N)])
def A(N,d,atx,arx,gl=0):
    Cm=C(N,d,gl); S=mp.inverse(mp.sqrtm(Cm)); Ci=mp.inverse(Cm)
    adr=a(N,d,arx); ars=a(N,d,atx)
    t1=abs((adr.T*Ci*ars)[0]); t2=0
    for n in range(N):
        t2+=abs((adr.T*S[:,n])[0])*abs((S[n,:]*ars)[0])
    return (t1+t2)**2/4
for d in ['0.25','0.1','0.05']:
    print(d, mp.nstr(A(4,mp.mpf(d),0,mp.pi),20), mp.nstr(mp.eig(C(4,mp.mpf(d)))[0][0],5))
for g in ['0','0.01','0.1','1']:
    print('loss',g, mp.nstr(A(4,mp.mpf('0.1'),0,mp.pi,mp.mpf(g)),20))
