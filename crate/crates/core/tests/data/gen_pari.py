import random, cypari2
pari = cypari2.Pari()
random.seed(20261015)
def kod(code):
    code=int(code)
    if code==1: return "I0"
    if code>4: return "I%d"%(code-4)
    if code==2: return "II"
    if code==3: return "III"
    if code==4: return "IV"
    if code==-1: return "I0*"
    if code<-4: return "I%d*"%(-code-4)
    return {-2:"II*",-3:"III*",-4:"IV*"}[code]
out=[]
seen=set()
def add(a,p):
    key=(tuple(a),p)
    if key in seen: return
    E=pari.ellinit(a)
    if pari.ellglobalred(E) is None: pass
    if E.disc()==0: return
    seen.add(key)
    r=pari.elllocalred(E,p)
    f=int(r[0]); t=kod(r[1]); c=int(r[3])
    red="-"
    if t[0]=="I" and t[1:].isdigit() and t!="I0":
        ap=int(pari.ellap(E,p))
        red="split" if ap==1 else "nonsplit"
    out.append("%d %s | %s %d %d %s"%(p," ".join(map(str,a)),t,f,c,red))
for p in [2,3,5,7,11]:
    for _ in range(500):
        a=[random.randint(-60,60) for _ in range(5)]
        if pari.ellinit(a).disc()!=0: add(a,p)
    for _ in range(900):
        ks=[random.randint(0,4),random.randint(0,5),random.randint(0,6),random.randint(0,7),random.randint(0,10)]
        a=[random.choice([0,0,1,-1,2,3,-3,5,7,-11])*p**k for k in ks]
        try:
            if pari.ellinit(a).disc()!=0: add(a,p)
        except Exception: pass
    for _ in range(150):
        a=[random.randint(-9,9) for _ in range(5)]
        u=p**random.randint(1,2)
        b=[a[0]*u,a[1]*u**2,a[2]*u**3,a[3]*u**4,a[4]*u**6]
        if pari.ellinit(b).disc()!=0: add(b,p)
open("pari_localred.txt","w").write("# p a1 a2 a3 a4 a6 | type f c reduction  (elllocalred, ellap)\n"+"\n".join(out)+"\n")
print(len(out))
from collections import Counter
print(Counter(l.split("|")[1].split()[0] for l in out))
